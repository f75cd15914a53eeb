#!/usr/bin/env python3
"""Recompute an ExecReport from the raw JSONL traces and compare it with the emitted one.

usage: recompute_report.py REPORT.json TYPELINE.jsonl BASELINE.jsonl
Exit status 0 when every field matches, 1 otherwise.
"""
import json
import sys


def load_records(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def one_minus(slots, ops):
    return 0.0 if ops == 0 else 1.0 - slots / ops


def recompute(typeline, baseline):
    data = [r for r in typeline if r["kind"] != "control"]
    load_ops = sum(r["loads"] for r in data)
    load_slots = sum(1 for r in data if r["loads"] > 0)
    compute_ops = sum(r["computes"] for r in data)
    compute_slots = sum(1 for r in data if r["computes"] > 0)
    ops = sum(r["memberCount"] for r in data)
    routed = sum(r["routed"] for r in data)
    cycles_t = sum(r["cost"] for r in typeline)
    cycles_b = sum(r["cost"] for r in baseline)
    hist = {}
    for r in data:
        if r["kind"] in ("load-cluster", "op-cluster"):
            key = str(r["memberCount"])
            hist[key] = hist.get(key, 0) + 1
    return {
        "loadParallelism": one_minus(load_slots, load_ops),
        "computeParallelism": one_minus(compute_slots, compute_ops),
        "cycleReduction": 0.0 if cycles_b == 0 else (cycles_b - cycles_t) / cycles_b,
        "missHandledFraction": 0.0 if ops == 0 else routed / ops,
        "cyclesTypeline": cycles_t,
        "cyclesBaseline": cycles_b,
        "clusterHistogram": hist,
    }


def main(argv):
    if len(argv) != 4:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    with open(argv[1]) as f:
        report = json.load(f)
    expected = recompute(load_records(argv[2]), load_records(argv[3]))
    bad = 0
    for key, want in expected.items():
        got = report.get(key)
        same = abs(got - want) <= 1e-12 if isinstance(want, float) else got == want
        if not same:
            print(f"{key}: report {got!r}, recomputed {want!r}")
            bad += 1
    if bad == 0:
        print("report matches traces")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
