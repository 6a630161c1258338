#!/usr/bin/env python3
"""Writes the 50-entity snapshot pair used by the golden end-to-end run.

Outputs old.jsonl, new.jsonl, templates.jsonl and popularity.tsv into the
directory given on the command line (default: this script's directory).
The content is a pure function of SEED.
"""

import json
import random
import sys
from pathlib import Path

SEED = 2023

PROPS = [
    # id, label, datatype, single best value with temporal separators
    ("P31", "instance of", "wikibase-item", False),
    ("P6", "head of government", "wikibase-item", True),
    ("P1082", "population", "quantity", True),
    ("P54", "member of sports team", "wikibase-item", False),
    ("P286", "head coach", "wikibase-item", True),
    ("P571", "inception", "time", False),
    ("P570", "date of death", "time", False),
    ("P106", "occupation", "wikibase-item", False),
    ("P1705", "native label", "string", False),
]
META_PROP = ("P1343", "described by source", "wikibase-item")
RESTRICTIVE = ("P1001", "applies to jurisdiction", "wikibase-item")

TEMPLATES = {
    "P31": ["SUBJ is an instance of OBJ", "SUBJ is a kind of OBJ"],
    "P6": ["The head of government of SUBJ is OBJ", "SUBJ is governed by OBJ", "The leader of SUBJ is OBJ"],
    "P1082": ["The population of SUBJ is OBJ", "SUBJ has a population of OBJ"],
    "P54": ["SUBJ plays for OBJ", "SUBJ is a member of OBJ"],
    "P286": ["The head coach of SUBJ is OBJ", "SUBJ is coached by OBJ"],
    "P571": ["SUBJ was founded on OBJ"],
    "P106": ["The occupation of SUBJ is OBJ", "SUBJ works as OBJ", "SUBJ is employed as OBJ"],
}


def prop_doc(pid, label, datatype, temporal=False, is_meta=False, restrictive=False):
    constraints = []
    if temporal:
        constraints.append({"kind": "single_best_value", "separators": ["P580", "P582", "P585"]})
    return {"id": pid, "kind": "property", "label": label, "datatype": datatype,
            "sitelink": {"exists": False, "page_kind": "article"}, "claims": {},
            "property_meta": {"is_meta": is_meta, "is_restrictive_qualifier": restrictive,
                              "constraints": constraints}}


def item_doc(qid, label, claims, page_kind="article", sitelink=True):
    return {"id": qid, "kind": "item", "label": label,
            "sitelink": {"exists": sitelink, "page_kind": page_kind}, "claims": claims}


def entity(value):
    return {"snaktype": "value", "datatype": "wikibase-item", "value": value}


def quantity(amount):
    return {"snaktype": "value", "datatype": "quantity", "value": {"amount": amount}}


def time(date):
    return {"snaktype": "value", "datatype": "time", "value": date}


def string(text):
    return {"snaktype": "value", "datatype": "string", "value": text}


def stmt(snak, rank="normal", start=None, end=None, point=None, extra=None):
    s = {"rank": rank, **snak}
    q = {}
    if start:
        q["P580"] = [{"datatype": "time", "value": start}]
    if end:
        q["P582"] = [{"datatype": "time", "value": end}]
    if point:
        q["P585"] = [{"datatype": "time", "value": point}]
    if extra:
        q.update(extra)
    if q:
        s["qualifiers"] = q
    return s


def date(rng, lo_year, hi_year):
    return f"{rng.randint(lo_year, hi_year)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"


def build(rng):
    people = [f"Q{2000 + i}" for i in range(18)]
    teams = [f"Q{3000 + i}" for i in range(7)]
    classes = ["Q5", "Q6256", "Q476028", "Q783794", "Q515"]
    jobs = ["Q82955", "Q937857", "Q33999"]
    places = [f"Q{1000 + i}" for i in range(12)]
    labels = {"Q5": "human", "Q6256": "country", "Q476028": "football club", "Q783794": "company",
              "Q515": "city", "Q82955": "politician", "Q937857": "footballer", "Q33999": "actor",
              "Q9999": "obscure list"}
    for i, q in enumerate(people):
        labels[q] = f"Person {i}"
    for i, q in enumerate(teams):
        labels[q] = f"Team {i}"
    for i, q in enumerate(places):
        labels[q] = f"Place {i}"

    old, new = {}, {}

    # Places: heads of government change, populations are re-counted.
    for q in places:
        c_old = {"P31": [stmt(entity(rng.choice(["Q6256", "Q515"])))]}
        head, start = rng.choice(people), date(rng, 2010, 2019)
        c_old["P6"] = [stmt(entity(head), start=start)]
        pop = rng.randint(10**5, 10**8)
        c_old["P1082"] = [stmt(quantity(str(pop)), rank="preferred", point=date(rng, 2015, 2020))]
        c_new = json.loads(json.dumps(c_old))
        roll = rng.random()
        if roll < 0.5:
            successor = rng.choice([p for p in people if p != head])
            switch = date(rng, 2021, 2022)
            c_new["P6"] = [stmt(entity(head), start=start, end=switch),
                           stmt(entity(successor), rank="preferred", start=switch)]
        elif roll < 0.65:
            c_new["P6"] = [stmt(entity(head), start=start, end=date(rng, 2021, 2022))]
        if rng.random() < 0.6:
            c_new["P1082"].append(stmt(quantity(str(int(pop * rng.uniform(0.9, 1.1)))), rank="preferred",
                                       point=date(rng, 2021, 2022)))
        if rng.random() < 0.3:
            # A restrictive qualifier disqualifies the statement.
            c_new["P1082"].append(stmt(quantity(str(pop + 1)), extra={RESTRICTIVE[0]: [entity("Q1000")]}))
        old[q], new[q] = c_old, c_new

    # People: careers move between teams, some die, jobs accumulate.
    for q in people:
        c_old = {"P31": [stmt(entity("Q5"))], "P106": [stmt(entity(rng.choice(jobs)))]}
        team, since = rng.choice(teams), date(rng, 2012, 2020)
        c_old["P54"] = [stmt(entity(team), start=since)]
        if rng.random() < 0.3:
            c_old["P1343"] = [stmt(entity("Q9999"))]
        c_new = json.loads(json.dumps(c_old))
        roll = rng.random()
        if roll < 0.4:
            move = date(rng, 2021, 2022)
            c_new["P54"] = [stmt(entity(team), start=since, end=move),
                            stmt(entity(rng.choice([t for t in teams if t != team])), start=move)]
        elif roll < 0.55:
            c_new["P570"] = [stmt(time(date(rng, 2021, 2022)))]
        elif roll < 0.7:
            c_new["P106"].append(stmt(entity(rng.choice(jobs))))
        elif roll < 0.8:
            c_new["P106"][0]["rank"] = "deprecated"
        if rng.random() < 0.2:
            c_new["P1705"] = [string(f"native {q}")]
        old[q], new[q] = c_old, c_new

    # Teams: coaches replaced.
    for q in teams:
        coach, since = rng.choice(people), date(rng, 2015, 2020)
        c_old = {"P31": [stmt(entity("Q476028"))], "P286": [stmt(entity(coach), start=since)]}
        c_new = json.loads(json.dumps(c_old))
        if rng.random() < 0.6:
            switch = date(rng, 2021, 2022)
            c_new["P286"] = [stmt(entity(coach), start=since, end=switch),
                             stmt(entity(rng.choice([p for p in people if p != coach])), start=switch)]
        old[q], new[q] = c_old, c_new

    # New entities: founded between the snapshots.
    fresh = [f"Q{4000 + i}" for i in range(4)]
    for i, q in enumerate(fresh):
        labels[q] = f"Startup {i}"
        new[q] = {"P31": [stmt(entity("Q783794"))], "P571": [stmt(time(date(rng, 2021, 2022)))],
                  "P6": [stmt(entity(rng.choice(people)), start=date(rng, 2021, 2022))]}

    # Classes and jobs exist in both snapshots without claims of interest.
    statics = classes + jobs
    for q in statics:
        old[q] = {}
        new[q] = {}

    docs_old, docs_new = [], []
    for pid, label, dt, temporal in PROPS:
        docs_old.append(prop_doc(pid, label, dt, temporal))
        docs_new.append(prop_doc(pid, label, dt, temporal))
    for pid, label, dt, flag in [(*META_PROP, "meta"), (*RESTRICTIVE, "restrictive")]:
        d = prop_doc(pid, label, dt, is_meta=flag == "meta", restrictive=flag == "restrictive")
        docs_old.append(d)
        docs_new.append(d)
    for q in sorted(old, key=lambda x: int(x[1:])):
        docs_old.append(item_doc(q, labels[q], old[q]))
    for q in sorted(new, key=lambda x: int(x[1:])):
        docs_new.append(item_doc(q, labels[q], new[q]))
    # A disambiguation page is never relevant.
    docs_old.append(item_doc("Q9999", labels["Q9999"], {"P31": [stmt(entity("Q5"))]}, page_kind="disambiguation"))
    docs_new.append(item_doc("Q9999", labels["Q9999"], {"P31": [stmt(entity("Q5"))]}, page_kind="disambiguation"))

    subjects = set(old) | set(new)
    popularity = {q: rng.randint(1, 50000) for q in sorted(subjects, key=lambda x: int(x[1:]))}
    return docs_old, docs_new, popularity


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    docs_old, docs_new, popularity = build(rng)
    for name, docs in (("old.jsonl", docs_old), ("new.jsonl", docs_new)):
        with open(out / name, "w") as f:
            for d in docs:
                f.write(json.dumps(d, separators=(",", ":")) + "\n")
    with open(out / "templates.jsonl", "w") as f:
        for rel, texts in TEMPLATES.items():
            for i, t in enumerate(texts):
                f.write(json.dumps({"relation": rel, "template": t, "frequency": 10 - i}) + "\n")
    with open(out / "popularity.tsv", "w") as f:
        for q, c in popularity.items():
            f.write(f"{q}\t{c}\n")
    items = sum(1 for d in docs_new if d["kind"] == "item")
    print(f"{items} items in the new snapshot")


if __name__ == "__main__":
    main()
