"""Shared builders and independent oracles for the test suite."""

import random

from schema_aug.corpus import Corpus, DialogueSample
from schema_aug.schema_model import Schema, SlotDef


def tiny_schema():
    return Schema([
        SlotDef("hotel", "area", "area of the hotel", ("north", "south")),
        SlotDef("hotel", "name", "name of the hotel"),
        SlotDef("taxi", "departure", "where the taxi leaves from"),
        SlotDef("taxi", "destination", "where the taxi goes"),
        SlotDef("train", "day", "day of the train", ("monday", "tuesday")),
    ])


def sample(sid, state, dialogue_id=None, turn=0, history=None):
    return DialogueSample(
        sid, dialogue_id or sid, turn,
        history or (("user", f"utterance for {sid}"),),
        dict(state),
    )


def random_state(rng, schema, max_slots=4):
    k = rng.randint(0, min(max_slots, len(schema)))
    slots = rng.sample(list(schema.slot_names), k)
    return {s: rng.choice(["north", "cheap", "2", "monday", "guest house", "08:30"]) for s in slots}


def random_corpus(rng, schema, n_dialogues=None, max_turns=4):
    """Multi-turn dialogues with cumulative, randomly growing states."""
    n_dialogues = rng.randint(1, 6) if n_dialogues is None else n_dialogues
    samples = []
    for d in range(n_dialogues):
        did = f"d{d}"
        state = {}
        history = []
        for t in range(rng.randint(1, max_turns)):
            if history:
                history.append(("system", f"system reply {t}"))
            history.append(("user", f"user turn {t}"))
            for k, v in random_state(rng, schema, 2).items():
                state[k] = v
            if rng.random() < 0.15:
                state = {}
            samples.append(DialogueSample(f"{did}:{t}", did, t, tuple(history), dict(state)))
    return Corpus(samples, schema)


# --- brute-force metric oracle ---------------------------------------------------
# A deliberately naive re-count of hits written from the metric definitions,
# sharing no code with schema_aug.metrics.

def _norm(v):
    return " ".join(v.split()).lower()


def _same(a, b, normalize):
    if normalize:
        a = {k: _norm(v) for k, v in a.items()}
        b = {k: _norm(v) for k, v in b.items()}
    return set(a.items()) == set(b.items())


def brute_force_metrics(samples, preds, targets, normalize=True):
    """``preds`` maps sample_id -> state dict or None (unparsed)."""
    hits = [s for s in samples if preds[s.sample_id] is not None and _same(preds[s.sample_id], s.state, normalize)]
    target_set = [s for s in samples if any(k.split("-", 1)[0] in targets for k in s.state)]
    strict_hits = [s for s in target_set if preds[s.sample_id] is not None and _same(preds[s.sample_id], s.state, normalize)]
    proj_hits = []
    for s in target_set:
        p = preds[s.sample_id]
        if p is None:
            continue
        pt = {k: v for k, v in p.items() if k.split("-", 1)[0] in targets}
        rt = {k: v for k, v in s.state.items() if k.split("-", 1)[0] in targets}
        if _same(pt, rt, normalize):
            proj_hits.append(s)
    jga = len(hits) / len(samples) if samples else None
    tga_p = len(proj_hits) / len(target_set) if target_set else None
    tga_s = len(strict_hits) / len(target_set) if target_set else None
    return jga, tga_p, tga_s


# --- native-format fixtures ------------------------------------------------------

def spokenwoz_native(rng, schema, n_dialogues=12, max_turns=5):
    """A SpokenWOZ-style ``data.json`` dict with cumulative system-turn metadata."""
    data = {}
    names = list(schema.slot_names)
    for d in range(n_dialogues):
        log = []
        state = {}
        for t in range(rng.randint(1, max_turns)):
            log.append({"tag": "user", "text": f"user says {d}/{t}", "metadata": {}})
            for key in rng.sample(names, rng.randint(0, 2)):
                state[key] = rng.choice(["north", "cheap", "2", "monday", "ely", "18:45"])
            meta = {}
            for key, value in state.items():
                domain, base = key.split("-", 1)
                meta.setdefault(domain, {"semi": {}, "book": {"booked": []}})["semi"][base] = value
            log.append({"tag": "system", "text": f"system says {d}/{t}", "metadata": meta})
        data[f"SNG{d:04d}"] = {"log": log}
    return data


def multiwoz_native(rng, schema, n_dialogues=12, max_turns=5):
    """A MultiWOZ 2.2 ``dialogues_*.json`` list with cumulative user-frame states."""
    dialogues = []
    names = list(schema.slot_names)
    for d in range(n_dialogues):
        turns = []
        state = {}
        for t in range(rng.randint(1, max_turns)):
            for key in rng.sample(names, rng.randint(0, 2)):
                state[key] = rng.choice(["north", "cheap", "2", "monday", "ely", "18:45"])
            frames = {}
            for key, value in state.items():
                frames.setdefault(key.split("-", 1)[0], {})[key] = [value]
            turns.append({"speaker": "USER", "turn_id": str(2 * t), "utterance": f"user {d}/{t}",
                          "frames": [{"service": s, "state": {"slot_values": v}} for s, v in frames.items()]})
            turns.append({"speaker": "SYSTEM", "turn_id": str(2 * t + 1), "utterance": f"system {d}/{t}",
                          "frames": []})
        dialogues.append({"dialogue_id": f"MUL{d:04d}.json", "services": [], "turns": turns})
    return dialogues
