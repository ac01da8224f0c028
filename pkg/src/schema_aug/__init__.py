"""Schema Augmentation toolkit for zero-shot domain adaptation in dialogue state tracking."""

from .augmentation import (
    AugmentationPlan,
    RenameAssignment,
    ReplacementMap,
    apply_to_schema,
    apply_to_state,
    assign_renames,
    augment_corpus,
    bundled_map,
    invert,
    load_replacement_map,
)
from .corpus import Corpus, DialogueSample, filter_training, load_corpus, split_target, state_domains
from .metrics import EvalReport, evaluate, joint_goal_accuracy, target_goal_accuracy
from .prompt_renderer import PromptTemplate, render_prompt, render_schema_block
from .schema_model import Schema, SlotDef, bundled_schema, load_schema, restrict_to_domains
from .state_codec import ParseOutcome, extract_and_parse, serialize_state

__version__ = "0.1.0"
