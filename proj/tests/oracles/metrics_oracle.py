#!/usr/bin/env python3
"""Hand-rolled metrics oracle for 20 replacement updates.

Writes into OUT_DIR:
  dataset.jsonl  20 ReplaceObject records with clozes and neighbors
  model.json     token log-probabilities per (prompt, continuation) for the
                 unedited model ("pre") and each update method, plus the
                 generated text per prompt
  expected.json  per-case scores and the aggregated report rows

Every random neighbor is probed (random_neighbors is set above the pool
size), so the random bleedover does not depend on the draw.

Usage: metrics_oracle.py OUT_DIR [--seed 11]
"""

import argparse
import json
import math
import random
from pathlib import Path

CASES = 20
METHODS = ["ALPHA", "BETA"]
WORDS = "the of and a in to is was for on as by with he she it they from at".split()
COLUMNS = [
    ("Efficacy-D", "efficacy_diff", 100),
    ("Efficacy-S", "efficacy_success", 100),
    ("Gen.-D", "gen_diff", 100),
    ("Gen.-S", "gen_success", 100),
    ("Bleedover-Random", "bleedover_random", 100),
    ("Bleedover-KNN", "bleedover_knn", 100),
    ("Fluency", "fluency", 1),
]


def text_obj(value):
    return {"datatype": "string", "value": value}


def make_dataset(rng):
    records = []
    subjects = [f"Q{100 + i}" for i in range(CASES)]
    for i, s in enumerate(subjects):
        label = f"Entity{i}"
        rel = f"P{1 + i % 3}"
        new_o, old_o = f"New{i}", f"Old{i}"
        n_alt = rng.choice([0, 1, 2, 3, 4])
        alts = [f"Alt{j} clue for {label} gives" for j in range(n_alt)]
        neighbors = []
        for j in range(rng.randint(0, 4)):
            if rng.random() < 0.25:
                # Another case's own group, so it is excluded from that case's
                # random neighbors.
                other = rng.randrange(CASES)
                ns, nr = subjects[other], f"P{1 + other % 3}"
            else:
                ns, nr = f"Q{500 + rng.randrange(12)}", rel
            nlabel = f"Obj{ns}{nr}"
            cloze = "" if rng.random() < 0.15 else f"The {nr} of {ns} is"
            neighbors.append({
                "subject": ns,
                "relation": nr,
                "object": text_obj(nlabel),
                "object_label": nlabel,
                "cloze": cloze,
                "similarity": round(rng.uniform(0.05, 0.95), 6),
                "popularity": rng.randrange(1, 10000),
            })
        records.append({
            "subject": {"id": s, "label": label, "popularity": rng.randrange(1, 10**6), "is_new": False},
            "relation": {"id": rel, "label": f"relation {rel}"},
            "scenario": "ReplaceObject",
            "triples": [
                {"object": text_obj(old_o), "object_label": old_o,
                 "interval": {"start": "2015-01-01", "end": "2022-01-01"}, "label": "obsolete"},
                {"object": text_obj(new_o), "object_label": new_o,
                 "interval": {"start": "2022-01-01", "end": "+inf"}, "label": "new"},
            ],
            "verbalization": {
                "update_sentence": f"The {rel} of {label} is {new_o}",
                "cloze": f"The {rel} of {label} is",
                "alt_clozes": alts,
            },
            "neighbors": neighbors,
        })
    return records


def clozed(n):
    return n["cloze"] != "" and n["object_label"] != ""


def plan(records):
    """Prompts each case probes, by role."""
    pool, seen = [], set()
    for r in records:
        for n in r["neighbors"]:
            key = (n["subject"], n["relation"], n["object_label"])
            if clozed(n) and key not in seen:
                seen.add(key)
                pool.append(n)
    cases = []
    for r in records:
        v = r["verbalization"]
        s, rel = r["subject"]["id"], r["relation"]["id"]
        gen = v["alt_clozes"][:4] or [v["cloze"]]
        cases.append({
            "new": r["triples"][1]["object_label"],
            "old": r["triples"][0]["object_label"],
            "update": v["cloze"],
            "gen": gen,
            "knn": [(n["cloze"], n["object_label"]) for n in r["neighbors"] if clozed(n)],
            "random": [(n["cloze"], n["object_label"]) for n in pool
                       if not (n["subject"] == s and n["relation"] == rel)],
        })
    return cases


def random_logprobs(rng, low=-4.0):
    return [round(rng.uniform(low, -0.01), 6) for _ in range(rng.randint(1, 3))]


def make_model(rng, cases):
    keys = []
    for c in cases:
        for p in [c["update"]] + c["gen"]:
            keys += [(p, c["new"]), (p, c["old"])]
        keys += c["knn"] + c["random"]
    keys = sorted(set(keys))
    gen_prompts = sorted({p for c in cases for p in c["gen"]})
    model = {}
    for phase in ["pre"] + METHODS:
        scores = [{"prompt": p, "continuation": o, "logprobs": random_logprobs(rng)} for (p, o) in keys]
        gens = [{"prompt": p, "text": " ".join(rng.choice(WORDS) for _ in range(rng.randint(0, 14)))}
                for p in gen_prompts]
        model[phase] = {"scores": scores, "generations": gens}
    return model


def seq_prob(logprobs):
    total = 0.0
    for lp in logprobs:
        total += lp
    return math.exp(total / len(logprobs))


def entropy(text, n):
    toks = text.split()
    if len(toks) < n:
        return 0.0
    grams = {}
    for i in range(len(toks) - n + 1):
        g = tuple(toks[i:i + n])
        grams[g] = grams.get(g, 0) + 1
    total = len(toks) - n + 1
    h = 0.0
    for g in sorted(grams):
        p = grams[g] / total
        h -= p * math.log2(p)
    return h


def mean(xs):
    total = 0.0
    for x in xs:
        total += x
    return total / len(xs)


def score(case, pre, post, gens):
    def p(table, prompt, o):
        return seq_prob(table[(prompt, o)])

    pn, po = p(post, case["update"], case["new"]), p(post, case["update"], case["old"])
    gd = [p(post, g, case["new"]) - p(post, g, case["old"]) for g in case["gen"]]
    gs = [1.0 if p(post, g, case["new"]) > p(post, g, case["old"]) else 0.0 for g in case["gen"]]

    def bleed(facts):
        if not facts:
            return 0.0
        return mean([max(p(pre, c, o) - p(post, c, o), 0.0) for (c, o) in facts])

    flu = mean([(2 / 3) * entropy(gens[g], 2) + (4 / 3) * entropy(gens[g], 3) for g in case["gen"]])
    return {
        "efficacy_diff": pn - po,
        "efficacy_success": 1.0 if pn > po else 0.0,
        "gen_diff": mean(gd),
        "gen_success": mean(gs),
        "bleedover_random": bleed(case["random"]),
        "bleedover_knn": bleed(case["knn"]),
        "fluency": flu,
    }


def aggregate(values):
    n = len(values)
    m = mean(values)
    ss = 0.0
    for v in values:
        ss += (v - m) * (v - m)
    sd = math.sqrt(ss / (n - 1))
    return {"mean": m, "half_width": 1.96 * sd / math.sqrt(n), "n": n}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    records = make_dataset(rng)
    cases = plan(records)
    model = make_model(rng, cases)

    def table(phase):
        return {(e["prompt"], e["continuation"]): e["logprobs"] for e in model[phase]["scores"]}

    pre = table("pre")
    expected = {"methods": {}}
    for m in METHODS:
        post = table(m)
        gens = {g["prompt"]: g["text"] for g in model[m]["generations"]}
        per_case = [score(c, pre, post, gens) for c in cases]
        report = {name: aggregate([r[field] * scale for r in per_case]) for (name, field, scale) in COLUMNS}
        expected["methods"][m] = {"cases": per_case, "report": report}

    with open(out / "dataset.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    with open(out / "model.json", "w") as f:
        json.dump(model, f, indent=1)
        f.write("\n")
    with open(out / "expected.json", "w") as f:
        json.dump(expected, f, indent=1)
        f.write("\n")
    print(f"{len(records)} cases, {sum(len(c['random']) for c in cases)} random probes")


if __name__ == "__main__":
    main()
