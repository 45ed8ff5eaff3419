#!/usr/bin/env python3
"""Brute-force reference values for the golden and IoU fixtures.

Written without reference to the Rust implementation: plain dictionary
lookups and arithmetic means. Writes expected.json next to each fixture.

    python3 fixtures/tools/oracle.py
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def norm(s):
    s = s.lower()
    strip = " \t\r\n\f\v.,!?"
    s = s.strip(strip)
    return " ".join(s.split())


def read_sets(path):
    sets = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if "metadata" in rec:
            continue
        sets[rec["label"]] = [(m["phrase"], float(m["score"])) for m in rec["members"]]
    return sets


def golden():
    d = ROOT / "golden"
    sets = read_sets(d / "aas.jsonl")
    questions = json.loads((d / "questions.json").read_text())
    preds = [json.loads(l) for l in (d / "predictions.jsonl").read_text().splitlines() if l.strip()]

    def run(k):
        exact = member = 0
        total = 0.0
        for p in preds:
            gt = norm(questions[str(p["question_id"])]["answer"])
            guess = norm(p["answer"])
            # Members are stored in rank order; the first k are kept.
            kept = dict(sets[gt][:k]) if k else dict(sets[gt])
            exact += guess == gt
            member += guess in kept
            total += kept.get(guess, 0.0)
        n = len(preds)
        return {"exact_match": exact / n, "aas_accuracy": total / n, "aas_membership": member / n}

    out = {"n_questions": len(preds), "full": run(None), "sweep": {str(k): run(k) for k in range(2, 11)}}
    (d / "expected.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    return out


def iou():
    d = ROOT / "iou"
    sets = read_sets(d / "auto.jsonl")
    human = {}
    for line in (d / "human.jsonl").read_text().splitlines():
        a = json.loads(line)
        human.setdefault(a["label"], set())
        if sum(a["votes"]) >= 2 and a["phrase"] != a["label"]:
            human[a["label"]].add(a["phrase"])
    per = {}
    for label, h in human.items():
        auto = {p for p, _ in sets[label] if p != label}
        union = auto | h
        per[label] = 1.0 if not union else len(auto & h) / len(union)
    out = {"per_label": per, "mean_iou": sum(per.values()) / len(per)}
    (d / "expected.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    return out


if __name__ == "__main__":
    g = golden()
    print("golden:", g["full"])
    print("iou:", iou())
