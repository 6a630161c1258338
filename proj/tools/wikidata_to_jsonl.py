#!/usr/bin/env python3
"""Convert a Wikidata JSON dump into the snapshot JSONL read by factdelta.

The dump is the usual JSON array with one entity per line (plain, .gz or
.bz2). Each entity becomes one output line:

  {"id","kind","label","description","sitelink":{"exists","page_kind"},
   "claims":{P:[{"rank","snaktype","datatype","value","qualifiers"}]}}

Property lines also get "datatype" and "property_meta". Constraints come from
P2302 statements (single-value and single-best-value, separators from P4155).
Meta relations and restrictive qualifiers cannot be read off a single entity,
so they are given on the command line as property ids or as classes matched
against the property's P31 values.

Statements with a datatype the pipeline does not model (lexemes, forms,
senses, entity schemas) are dropped.

Usage:
  wikidata_to_jsonl.py DUMP OUT.jsonl [--lang en] [--meta-class Q..]
      [--meta P..] [--restrictive-class Q..] [--restrictive P..]
"""

import argparse
import bz2
import gzip
import json
import sys

SINGLE_VALUE = "Q19474404"
SINGLE_BEST_VALUE = "Q52060874"
PROPERTY_CONSTRAINT = "P2302"
SEPARATOR = "P4155"
INSTANCE_OF = "P31"

PAGE_KIND_CLASSES = {
    "Q4167410": "disambiguation",
    "Q13406463": "list",
    "Q4167836": "category",
    "Q11266439": "template",
}

ENTITY_TYPES = {"wikibase-item", "wikibase-property"}
STRING_TYPES = {"string", "external-id", "url", "commonsMedia", "math", "musical-notation",
                "geo-shape", "tabular-data"}
# Commons pages are links for filtering purposes.
AS_URL = {"commonsMedia", "geo-shape", "tabular-data"}


def open_dump(path):
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    if path.endswith(".bz2"):
        return bz2.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def entities(stream):
    for line in stream:
        line = line.strip()
        if line in ("", "[", "]"):
            continue
        if line.endswith(","):
            line = line[:-1]
        yield json.loads(line)


def unit_of(url):
    if not url or url == "1":
        return None
    return url.rsplit("/", 1)[-1]


def convert_value(datatype, datavalue):
    """(datatype, value) for the snapshot schema, or None to drop the snak."""
    v = datavalue.get("value")
    if datatype in ENTITY_TYPES:
        return datatype, v["id"]
    if datatype == "quantity":
        out = {"amount": v["amount"]}
        unit = unit_of(v.get("unit"))
        if unit:
            out["unit"] = unit
        return datatype, out
    if datatype == "time":
        return datatype, {"time": v["time"], "precision": v.get("precision", 11)}
    if datatype == "monolingualtext":
        return datatype, {"text": v["text"], "language": v["language"]}
    if datatype == "globe-coordinate":
        return datatype, {"latitude": v["latitude"], "longitude": v["longitude"]}
    if datatype in AS_URL:
        return "url", v
    if datatype in ("math", "musical-notation"):
        return "string", v
    if datatype in STRING_TYPES:
        return datatype, v
    return None


def convert_snak(snak):
    datatype = snak.get("datatype")
    snaktype = snak.get("snaktype", "value")
    if snaktype != "value":
        return {"snaktype": snaktype, "datatype": datatype or "string"}
    converted = convert_value(datatype, snak["datavalue"])
    if converted is None:
        return None
    dt, value = converted
    return {"snaktype": "value", "datatype": dt, "value": value}


def convert_statement(stmt):
    main = convert_snak(stmt["mainsnak"])
    if main is None:
        return None
    out = {"rank": stmt.get("rank", "normal"), **main}
    quals = {}
    for pid, snaks in stmt.get("qualifiers", {}).items():
        converted = [q for q in (convert_snak(s) for s in snaks) if q is not None]
        if converted:
            quals[pid] = converted
    if quals:
        out["qualifiers"] = quals
    return out


def instance_classes(entity):
    out = set()
    for stmt in entity.get("claims", {}).get(INSTANCE_OF, []):
        dv = stmt["mainsnak"].get("datavalue")
        if dv and dv.get("type") == "wikibase-entityid":
            out.add(dv["value"]["id"])
    return out


def constraints(entity):
    out = []
    for stmt in entity.get("claims", {}).get(PROPERTY_CONSTRAINT, []):
        dv = stmt["mainsnak"].get("datavalue")
        if not dv:
            continue
        kind = {SINGLE_VALUE: "single_value", SINGLE_BEST_VALUE: "single_best_value"}.get(dv["value"]["id"])
        if kind is None:
            continue
        seps = []
        for q in stmt.get("qualifiers", {}).get(SEPARATOR, []):
            if q.get("datavalue"):
                seps.append(q["datavalue"]["value"]["id"])
        out.append({"kind": kind, "separators": seps})
    return out


def convert_entity(entity, args):
    kind = entity.get("type")
    if kind not in ("item", "property"):
        return None
    classes = instance_classes(entity)
    page_kind = "article"
    for cls, pk in PAGE_KIND_CLASSES.items():
        if cls in classes:
            page_kind = pk
            break
    site = f"{args.lang}wiki"
    out = {
        "id": entity["id"],
        "kind": kind,
        "label": entity.get("labels", {}).get(args.lang, {}).get("value", ""),
        "description": entity.get("descriptions", {}).get(args.lang, {}).get("value", ""),
        "sitelink": {"exists": site in entity.get("sitelinks", {}), "page_kind": page_kind},
        "claims": {},
    }
    for pid, stmts in entity.get("claims", {}).items():
        converted = [s for s in (convert_statement(x) for x in stmts) if s is not None]
        if converted:
            out["claims"][pid] = converted
    if kind == "property":
        out["datatype"] = entity.get("datatype", "")
        out["property_meta"] = {
            "is_meta": entity["id"] in args.meta or bool(classes & set(args.meta_class)),
            "is_restrictive_qualifier": entity["id"] in args.restrictive or bool(classes & set(args.restrictive_class)),
            "constraints": constraints(entity),
        }
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dump")
    ap.add_argument("out")
    ap.add_argument("--lang", default="en")
    ap.add_argument("--meta", action="append", default=[], help="property id treated as meta")
    ap.add_argument("--meta-class", action="append", default=[], help="P31 class marking meta properties")
    ap.add_argument("--restrictive", action="append", default=[], help="restrictive qualifier property id")
    ap.add_argument("--restrictive-class", action="append", default=[],
                    help="P31 class marking restrictive qualifiers")
    args = ap.parse_args(argv)

    written = skipped = 0
    with open_dump(args.dump) as src, open(args.out, "w", encoding="utf-8") as dst:
        for entity in entities(src):
            doc = convert_entity(entity, args)
            if doc is None:
                skipped += 1
                continue
            dst.write(json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n")
            written += 1
    print(f"{written} entities written, {skipped} skipped", file=sys.stderr)


if __name__ == "__main__":
    main()
