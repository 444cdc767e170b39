#!/usr/bin/env python3
"""Writes the small synthetic corpus used by the test suites.

Sentences follow a few restaurant-review templates with hand-built
dependency parses, so labels are recoverable from the adjective attached to
the aspect. Output is deterministic for a given seed.
"""
import argparse
import json
import random
from pathlib import Path

POS = ["great", "delicious", "friendly", "excellent", "tasty", "lovely"]
NEG = ["awful", "rude", "cold", "bland", "terrible", "slow"]
NEU = ["okay", "average", "standard", "ordinary"]
ASPECTS = [["food"], ["service"], ["staff"], ["pasta"], ["wine", "list"], ["dessert"], ["pizza"], ["decor"],
           ["waiter"], ["sushi"], ["fish", "tacos"], ["coffee"]]


def clause(aspect, adj, offset):
    """'the <aspect> was <adj>' as CoNLL rows starting at token offset+1.

    The adjective row carries head None; the caller attaches it.
    """
    toks = ["the"] + aspect + ["was", adj]
    noun = offset + 1 + len(aspect)
    adj_idx = offset + len(toks)
    rows = [(offset + 1, "the", noun, "det")]
    for k, w in enumerate(aspect[:-1]):
        rows.append((offset + 2 + k, w, noun, "compound"))
    rows.append((noun, aspect[-1], adj_idx, "nsubj"))
    rows.append((adj_idx - 1, "was", adj_idx, "cop"))
    rows.append((adj_idx, adj, None, None))
    return toks, rows, adj_idx, offset + 2


def label_of(adj):
    return "positive" if adj in POS else "negative" if adj in NEG else "neutral"


def make_example(rng):
    a1 = rng.choice(ASPECTS)
    adj1 = rng.choice(POS + NEG + NEU)
    toks, rows, root, a1_start = clause(a1, adj1, 0)
    rows = [r if r[2] is not None else (r[0], r[1], 0, "root") for r in rows]
    target = (a1_start, len(a1), label_of(adj1))
    if rng.random() < 0.5:
        a2 = rng.choice([a for a in ASPECTS if a != a1])
        adj2 = rng.choice(POS + NEG + NEU)
        conj = rng.choice(["but", "and"])
        cc_idx = len(toks) + 1
        toks2, rows2, root2, a2_start = clause(a2, adj2, cc_idx)
        rows.append((cc_idx, conj, root2, "cc"))
        rows += [r if r[2] is not None else (r[0], r[1], root, "conj") for r in rows2]
        toks += [conj] + toks2
        if rng.random() < 0.5:
            target = (a2_start, len(a2), label_of(adj2))
    rows.sort()
    record = {"tokens": toks, "aspect_start": target[0], "aspect_len": target[1], "label": target[2]}
    lines = ["\t".join([str(i), form, form, "_", "_", "_", str(head), rel, "_", "_"]) for i, form, head, rel in rows]
    return record, "\n".join(lines) + "\n"


def write_split(out, name, n, rng):
    recs, parses = zip(*(make_example(rng) for _ in range(n)))
    with open(out / f"{name}.jsonl", "w") as f:
        for r in recs:
            f.write(json.dumps(r) + "\n")
    with open(out / f"{name}.conllu", "w") as f:
        f.write("\n".join(parses))
    return list(recs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--train", type=int, default=32)
    ap.add_argument("--test", type=int, default=16)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    recs = write_split(args.out, "train", args.train, rng) + write_split(args.out, "test", args.test, rng)
    # "ordinary" stays out of the embedding file so unknown-row initialization is exercised
    words = sorted({t for r in recs for t in r["tokens"]} - {"ordinary"})
    with open(args.out / "glove.txt", "w") as f:
        for w in words:
            f.write(w + " " + " ".join(f"{rng.uniform(-0.5, 0.5):.5f}" for _ in range(args.dim)) + "\n")


if __name__ == "__main__":
    main()
