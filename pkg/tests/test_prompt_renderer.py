import json

import pytest
from hypothesis import given, strategies as st

from schema_aug.augmentation import AugmentationPlan, apply_to_schema, assign_renames, bundled_map
from schema_aug.prompt_renderer import PromptTemplate, render_dialogue, render_prompt, render_schema_block
from schema_aug.schema_model import Schema, SlotDef, bundled_schema, restrict_to_domains
from schema_aug.state_codec import extract_and_parse

from helpers import sample

HOTEL_RESTAURANT = restrict_to_domains(bundled_schema("multiwoz"), {"hotel", "restaurant"})


def test_slot_without_values():
    schema = Schema([SlotDef("hotel", "name", "name of the hotel")])
    assert render_schema_block(schema).splitlines()[1] == \
        "- Slot: hotel-name; Description: name of the hotel; Possible values: []"


def test_single_slot_block():
    block = render_schema_block(Schema([SlotDef("a", "b", "c", ("x",))]))
    assert block == "### Schema:\n- Slot: a-b; Description: c; Possible values: ['x']"


def test_original_golden(golden):
    assert render_schema_block(HOTEL_RESTAURANT) == golden("hotel_restaurant_original.txt")


def test_single_ssa_golden(golden):
    a = assign_renames(AugmentationPlan("ssa", "single", 42, bundled_map("ssa")), HOTEL_RESTAURANT, "s")
    assert render_schema_block(apply_to_schema(a, HOTEL_RESTAURANT)) == golden("hotel_restaurant_single_ssa.txt")


def test_render_dialogue():
    assert render_dialogue([("user", "i need a cheap hotel")]) == "USER: i need a cheap hotel"
    hist = [("user", "a"), ("system", "b"), ("user", "c"), ("system", "d")]
    assert render_dialogue(hist).splitlines() == ["USER: a", "SYSTEM: b", "USER: c", "SYSTEM: d"]
    assert render_dialogue([("user", "two\nlines")]) == "USER: two lines"


def test_no_schema_prompt():
    p = render_prompt(PromptTemplate(include_schema=False), HOTEL_RESTAURANT, sample("a", {}))
    assert "### Schema:" not in p.text
    assert "USER: utterance for a" in p.text


def test_prompt_contains_schema_block(golden):
    p = render_prompt(PromptTemplate(), HOTEL_RESTAURANT, sample("a", {}))
    assert golden("hotel_restaurant_original.txt") in p.text


def test_train_mode_target():
    p = render_prompt(PromptTemplate(), HOTEL_RESTAURANT, sample("a", {}), mode="train")
    assert p.target == "{}"
    p = render_prompt(PromptTemplate(), HOTEL_RESTAURANT, sample("b", {"hotel-area": "north"}), mode="train")
    assert extract_and_parse(p.target).state == {"hotel-area": "north"}
    assert render_prompt(PromptTemplate(), HOTEL_RESTAURANT, sample("b", {}), mode="infer").target is None


def test_bad_mode():
    with pytest.raises(ValueError):
        render_prompt(PromptTemplate(), HOTEL_RESTAURANT, sample("a", {}), mode="eval")


def test_template_from_file(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"instruction": "Do DST.", "dialogue_header": "Dialogue:"}))
    t = PromptTemplate.from_file(path, include_schema=False)
    text = render_prompt(t, HOTEL_RESTAURANT, sample("a", {})).text
    assert text.startswith("Do DST.\n\nDialogue:\nUSER:")
    path.write_text(json.dumps({"instructions": "typo"}))
    with pytest.raises(ValueError, match="instructions"):
        PromptTemplate.from_file(path)


def test_layout():
    t = PromptTemplate(instruction="I")
    text = render_prompt(t, Schema([SlotDef("a", "b", "c")]), sample("s", {})).text
    assert text == (
        "I\n\n### Schema:\n- Slot: a-b; Description: c; Possible values: []"
        "\n\n### Dialogue:\nUSER: utterance for s\n\n### Dialogue state:"
    )


field = st.text(alphabet="abc xyz'", min_size=1, max_size=5)


@given(field, field, st.lists(field, unique=True, max_size=3), field, field, st.lists(field, unique=True, max_size=3))
def test_block_is_injective(b1, d1, v1, b2, d2, v2):
    s1 = Schema([SlotDef("dom", b1.replace(" ", "_"), d1, tuple(v1))])
    s2 = Schema([SlotDef("dom", b2.replace(" ", "_"), d2, tuple(v2))])
    if s1 != s2:
        assert render_schema_block(s1) != render_schema_block(s2)
