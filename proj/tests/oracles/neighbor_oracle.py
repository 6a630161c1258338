#!/usr/bin/env python3
"""Brute-force nearest-triple oracle.

Generates a small synthetic KB and, for every (subject, relation) group in
it, the k nearest old-snapshot triples computed from all-pairs TF-IDF cosine
similarity. Writes kb.tsv and expected.jsonl into the output directory.

Usage: neighbor_oracle.py OUT_DIR [--entities 200] [--seed 7]
"""

import argparse
import json
import math
import random
from collections import Counter
from pathlib import Path

K = 10
N = 500
RELATIONS = ["P1", "P2", "P3", "P4", "P5", "P6"]


def generate(entities, seed):
    rng = random.Random(seed)
    subjects = [f"Q{i}" for i in range(1, entities + 1)]
    classes = [f"Q{9000 + i}" for i in range(40)]
    old, new = set(), set()

    def random_facts(s):
        facts = set()
        for _ in range(rng.randint(0, 7)):
            r = rng.choice(RELATIONS)
            roll = rng.random()
            if roll < 0.55:
                facts.add((s, r, "E", rng.choice(classes)))
            elif roll < 0.85:
                facts.add((s, r, "E", rng.choice(subjects)))
            else:
                facts.add((s, r, "S", f"lit{rng.randint(0, 30)}"))
        return facts

    i = 0
    while i < len(subjects):
        s = subjects[i]
        facts = random_facts(s)
        in_old = rng.random() < 0.8
        if in_old:
            old |= facts
            if rng.random() < 0.3:
                # A few facts change between the snapshots.
                new |= {f for f in facts if rng.random() < 0.9} | random_facts(s)
            else:
                new |= facts
        else:
            new |= facts
        # Twins share every triple but the subject, so their similarities tie.
        if rng.random() < 0.15 and i + 1 < len(subjects):
            twin = subjects[i + 1]
            twin_facts = {(twin, r, k, o) for (_, r, k, o) in facts}
            new |= twin_facts
            if in_old:
                old |= twin_facts
            i += 1
        i += 1
    return sorted(old), sorted(new)


def feature_doc(s, old_by_subject, new_by_subject):
    tokens = [s]
    for facts in (old_by_subject.get(s, []), new_by_subject.get(s, [])):
        ents = [(r, o) for (r, k, o) in facts if k == "E"]
        if ents:
            tokens += [o for (_, o) in ents]
            tokens += [f"{r}|{o}" for (r, o) in ents]
            break
    return tokens


def canonical(kind, value):
    return ("E:" if kind == "E" else "S:") + value


def by_subject(triples):
    out = {}
    for (s, r, k, o) in triples:
        out.setdefault(s, []).append((r, k, o))
    for s in out:
        out[s].sort(key=lambda f: (f[0], canonical(f[1], f[2])))
    return out


def tfidf(docs):
    n_docs = len(docs)
    df = Counter()
    for toks in docs.values():
        df.update(set(toks))
    idf = {t: math.log(n_docs / c) for t, c in df.items()}
    vectors = {}
    for s, toks in docs.items():
        weights = {t: c * idf[t] for t, c in Counter(toks).items() if c * idf[t] != 0}
        sq = 0.0
        for x in sorted(w * w for w in weights.values()):
            sq += x
        norm = math.sqrt(sq)
        vectors[s] = {t: (w / norm if sq > 0 else w) for t, w in weights.items()}
    return vectors


def cosine(q, v):
    total = 0.0
    for t in sorted(q):
        if t in v:
            total += q[t] * v[t]
    return total


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--entities", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    old, new = generate(args.entities, args.seed)
    old_by, new_by = by_subject(old), by_subject(new)
    subjects = sorted(set(old_by) | set(new_by))
    docs = {s: feature_doc(s, old_by, new_by) for s in subjects}
    vectors = tfidf(docs)

    with open(out / "kb.tsv", "w") as f:
        for side, triples in (("old", old), ("new", new)):
            for (s, r, k, o) in triples:
                f.write(f"{side}\t{s}\t{r}\t{k}\t{o}\n")

    queries = sorted({(s, r) for (s, r, _, _) in old} | {(s, r) for (s, r, _, _) in new})
    with open(out / "expected.jsonl", "w") as f:
        for (s, r) in queries:
            q = vectors[s]
            sims = [(cosine(q, vectors[e]), e) for e in subjects if e != s]
            sims = [(sim, e) for (sim, e) in sims if sim > 0]
            sims.sort(key=lambda x: (-x[0], x[1]))
            found = []
            for sim, e in sims[:N]:
                group = [f for f in old_by.get(e, []) if f[0] == r]
                if not group:
                    continue
                _, k, o = group[0]
                found.append({"subject": e, "kind": k, "object": o, "similarity": min(sim, 1.0)})
                if len(found) == K:
                    break
            f.write(json.dumps({"subject": s, "relation": r, "neighbors": found}) + "\n")
    print(f"{len(old)} old triples, {len(new)} new triples, {len(queries)} queries")


if __name__ == "__main__":
    main()
