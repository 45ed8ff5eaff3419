#!/usr/bin/env python3
"""Regenerates the bundled fixtures. Deterministic; run from anywhere.

    python3 fixtures/tools/make_fixtures.py

Golden report values are computed separately by oracle.py.
"""

import hashlib
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

LABELS = [
    "batter", "women", "road", "teddy bear", "woman", "man", "bat", "dog",
    "car", "shirt", "table", "tree", "grass", "sky", "white", "red", "yes",
    "no", "horse", "bus",
]

# ---------------------------------------------------------------- WordNet

# key: (pos, lex file, lemmas, hypernym keys, gloss). "@i" marks an
# instance hypernym.
NOUNS = [
    ("batter", 18, ["batter", "hitter", "slugger", "batsman"], ["ballplayer"], "(baseball) a ballplayer who is batting"),
    ("ballplayer", 18, ["ballplayer", "baseball_player"], ["athlete"], "an athlete who plays baseball"),
    ("athlete", 18, ["athlete", "jock"], ["contestant"], "a person trained to compete in sports"),
    ("contestant", 18, ["contestant"], ["person"], "a person who participates in competitions"),
    ("person", 3, ["person", "individual", "someone"], ["organism"], "a human being"),
    ("organism", 3, ["organism", "being"], [], "a living thing that has the ability to act or function independently"),
    ("woman", 18, ["woman", "adult_female"], ["adult", "female"], "an adult female person"),
    ("adult", 18, ["adult", "grownup"], ["person"], "a fully developed person from maturity onward"),
    ("female", 18, ["female", "female_person"], ["person"], "a person who belongs to the sex that can have babies"),
    ("man", 18, ["man", "adult_male"], ["adult", "male"], "an adult person who is male"),
    ("male", 18, ["male", "male_person"], ["person"], "a person who belongs to the sex that cannot have babies"),
    ("teddy", 6, ["teddy", "teddy_bear"], ["plaything"], "a child's toy bear"),
    ("plaything", 6, ["plaything", "toy"], ["artifact"], "an artifact designed to be played with"),
    ("artifact", 6, ["artifact", "artefact"], [], "a man-made object taken as a whole"),
    ("road", 6, ["road", "route"], ["way"], "an open way for travel or transportation"),
    ("way", 6, ["way"], ["artifact"], "any artifact consisting of a road or path affording passage"),
    ("street", 6, ["street"], ["thoroughfare"], "a thoroughfare that is lined with buildings"),
    ("thoroughfare", 6, ["thoroughfare"], ["way"], "a public road from one place to another"),
    ("bat_club", 6, ["bat"], ["club"], "a club used for hitting a ball in various games"),
    ("club", 6, ["club"], ["stick"], "stout stick that is larger at one end"),
    ("stick", 6, ["stick"], ["artifact"], "an implement consisting of a length of wood"),
    ("bat_animal", 5, ["bat", "chiropteran"], ["placental"], "nocturnal mouselike mammal"),
    ("placental", 5, ["placental", "placental_mammal", "eutherian"], ["mammal"], "mammals having a placenta"),
    ("mammal", 5, ["mammal", "mammalian"], ["organism"], "any warm-blooded vertebrate"),
    ("dog", 5, ["dog", "domestic_dog", "Canis_familiaris"], ["canine", "domestic_animal"], "a member of the genus Canis"),
    ("canine", 5, ["canine", "canid"], ["placental"], "any of various fissiped mammals"),
    ("domestic_animal", 5, ["domestic_animal", "domesticated_animal"], ["organism"], "any of various animals that have been tamed"),
    ("car", 6, ["car", "auto", "automobile", "machine", "motorcar"], ["motor_vehicle"], "a motor vehicle with four wheels"),
    ("motor_vehicle", 6, ["motor_vehicle", "automotive_vehicle"], ["vehicle"], "a self-propelled wheeled vehicle"),
    ("vehicle", 6, ["vehicle"], ["artifact"], "a conveyance that transports people or objects"),
    ("shirt", 6, ["shirt"], ["garment"], "a garment worn on the upper half of the body"),
    ("garment", 6, ["garment"], ["artifact"], "an article of clothing"),
    ("table", 6, ["table"], ["furniture"], "a piece of furniture having a smooth flat top"),
    ("furniture", 6, ["furniture", "piece_of_furniture"], ["artifact"], "furnishings that make a room ready for occupancy"),
    ("tree", 20, ["tree"], ["woody_plant"], "a tall perennial woody plant"),
    ("woody_plant", 20, ["woody_plant", "ligneous_plant"], ["plant"], "a plant having hard lignified tissues"),
    ("plant", 3, ["plant", "flora"], ["organism"], "a living organism lacking the power of locomotion"),
    ("grass", 20, ["grass"], ["herb"], "narrow-leaved green herbage"),
    ("herb", 20, ["herb", "herbaceous_plant"], ["plant"], "a plant lacking a permanent woody stem"),
    ("sky", 17, ["sky"], ["atmosphere"], "the atmosphere and outer space as viewed from the earth"),
    ("atmosphere", 17, ["atmosphere"], [], "the envelope of gases surrounding the earth"),
    ("horse", 5, ["horse", "Equus_caballus"], ["equine"], "solid-hoofed herbivorous quadruped"),
    ("equine", 5, ["equine", "equid"], ["placental"], "hoofed mammals having slender legs"),
    ("secretariat", 5, ["Secretariat"], ["@i:horse"], "a famous racehorse"),
    ("bus", 6, ["bus", "autobus", "coach", "omnibus", "passenger_vehicle"], ["public_transport"], "a vehicle carrying many passengers"),
    ("public_transport", 6, ["public_transport"], ["vehicle"], "conveyance for passengers"),
    ("white_n", 7, ["white", "whiteness"], ["color"], "the quality of having the color of snow"),
    ("red_n", 7, ["red", "redness"], ["color"], "red color or pigment"),
    ("color", 7, ["color", "colour"], [], "a visual attribute of things"),
]

ADJECTIVES = [
    ("white_a", 0, "a", ["white"], ["&:whitish"], "being of the achromatic color of maximum lightness"),
    ("whitish", 0, "s", ["whitish", "snowy"], ["&:white_a"], "of the color of snow"),
    ("red_a", 0, "s", ["red", "reddish", "ruddy", "crimson", "scarlet"], [], "having any of numerous bright colors"),
]

WN_HEADER = [
    "  1 This software and database is being provided to you, the LICENSEE, by  ",
    "  2 Princeton University under the following license.  ",
    "  3 WordNet 3.0 Copyright 2006 by Princeton University.  All rights reserved.  ",
    "  4 This file is an excerpt of the WordNet database for test fixtures.  ",
]


def wordnet_lines(entries, pos_of):
    """Two-pass layout so every synset line starts at its stated offset."""
    header = "".join(line + "\n" for line in WN_HEADER)

    def render(offsets):
        lines = []
        for key, lex, ss_type, lemmas, ptrs, gloss in entries:
            words = " ".join(f"{w} 0" for w in lemmas)
            rendered = []
            for p in ptrs:
                symbol, target = (p.split(":", 1) if ":" in p else ("@", p))
                rendered.append(f"{symbol} {offsets[target]:08d} {pos_of[target]} 0000")
            body = f"{offsets[key]:08d} {lex:02d} {ss_type} {len(lemmas):02x} {words} {len(ptrs):03d}"
            if rendered:
                body += " " + " ".join(rendered)
            lines.append(f"{body} | {gloss}  \n")
        return lines

    placeholder = {key: 0 for key, *_ in entries}
    offsets, at = {}, len(header.encode())
    for (key, *_), line in zip(entries, render(placeholder)):
        offsets[key] = at
        at += len(line.encode())
    return header + "".join(render(offsets)), offsets


def index_text(entries, offsets, pos_char):
    senses = {}
    pointer_kinds = {}
    for key, _, _, lemmas, ptrs, _ in entries:
        for lemma in lemmas:
            lower = lemma.lower()
            senses.setdefault(lower, []).append(key)
            kinds = pointer_kinds.setdefault(lower, set())
            for p in ptrs:
                kinds.add(p.split(":", 1)[0] if ":" in p else "@")
    lines = [line + "\n" for line in WN_HEADER]
    for lemma in sorted(senses):
        keys = senses[lemma]
        kinds = sorted(pointer_kinds[lemma])
        ptr = f"{len(kinds)}" + ("".join(" " + k for k in kinds))
        offs = " ".join(f"{offsets[k]:08d}" for k in keys)
        lines.append(f"{lemma} {pos_char} {len(keys)} {ptr} {len(keys)} 0 {offs}  \n")
    return "".join(lines)


def write_wordnet(out):
    out.mkdir(parents=True, exist_ok=True)
    nouns = [(k, lex, "n", lem, ptrs, g) for k, lex, lem, ptrs, g in NOUNS]
    pos_n = {k: "n" for k, *_ in nouns}
    data, offsets = wordnet_lines(nouns, pos_n)
    (out / "data.noun").write_text(data)
    (out / "index.noun").write_text(index_text(nouns, offsets, "n"))

    adjs = [(k, lex, t, lem, ptrs, g) for k, lex, t, lem, ptrs, g in ADJECTIVES]
    pos_a = {k: t for k, _, t, *_ in adjs}
    data, offsets = wordnet_lines(adjs, pos_a)
    (out / "data.adj").write_text(data)
    (out / "index.adj").write_text(index_text(adjs, offsets, "a"))
    return len(nouns) + len(adjs)


# ---------------------------------------------------------------- vectors

BERT = {
    "batter": ["batsman", "pitcher", "hitter", "catcher"],
    "women": ["woman", "ladies", "girls", "females"],
    "road": ["street", "highway", "lane", "roadway"],
    "teddy bear": ["stuffed animal", "toy", "plush", "doll"],
    "woman": ["lady", "girl", "female", "women"],
    "man": ["guy", "gentleman", "male", "boy"],
    "bat": ["racket", "club", "stick", "paddle"],
    "dog": ["puppy", "canine", "pet", "hound"],
    "car": ["automobile", "vehicle", "sedan", "truck"],
    "shirt": ["t-shirt", "blouse", "top", "jersey"],
    "table": ["desk", "counter", "bench", "stand"],
    "tree": ["oak", "pine", "trunk", "branch"],
    "grass": ["lawn", "turf", "field", "weeds"],
    "sky": ["clouds", "heaven", "air", "sunset"],
    "white": ["ivory", "cream", "pale", "gray"],
    "red": ["crimson", "scarlet", "maroon", "pink"],
    "yes": ["yeah", "yep", "correct", "true"],
    "no": ["nope", "none", "not", "false"],
    "horse": ["pony", "stallion", "mare", "donkey"],
    "bus": ["coach", "shuttle", "van", "trolley"],
}

COUNTERFIT = {
    "batter": ["hitter", "slugger", "batsman", "striker"],
    "women": ["woman", "ladies", "wives", "mothers"],
    "road": ["street", "roadway", "route", "highway"],
    "teddy bear": ["toy", "doll", "bear", "plaything"],
    "woman": ["lady", "female", "wife", "mother"],
    "man": ["guy", "male", "husband", "gentleman"],
    "bat": ["club", "bludgeon", "racket", "cudgel"],
    "dog": ["hound", "puppy", "pooch", "mutt"],
    "car": ["automobile", "auto", "motorcar", "vehicle"],
    "shirt": ["blouse", "tee", "tunic", "top"],
    "table": ["desk", "counter", "tabletop", "board"],
    "tree": ["oak", "shrub", "bush", "timber"],
    "grass": ["lawn", "turf", "hay", "sod"],
    "sky": ["heavens", "atmosphere", "clouds", "heaven"],
    "white": ["ivory", "snowy", "whitish", "pale"],
    "red": ["crimson", "scarlet", "reddish", "ruby"],
    "yes": ["yeah", "yep", "yea", "affirmative"],
    "no": ["nope", "nay", "negative", "nah"],
    "horse": ["pony", "steed", "mare", "stallion"],
    "bus": ["coach", "minibus", "omnibus", "van"],
}

KNN_N = 4


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))


def vector_table(neighbors):
    """One axis per label plus one shared offset axis. A neighbor of rank r
    sits on its label's axis with an offset of 0.1 * (r + 1), so the label's
    top-KNN_N neighbors are exactly its list."""
    dim = len(LABELS) + 1
    offset_axis = len(LABELS)
    rows = {}
    for i, label in enumerate(LABELS):
        rows.setdefault(label, [0.0] * dim)[i] = 1.0
    for i, label in enumerate(LABELS):
        for rank, phrase in enumerate(neighbors[label]):
            v = rows.setdefault(phrase, [0.0] * dim)
            if phrase in LABELS:
                # A label listed as a neighbor keeps a zero offset so its own
                # neighborhood is undisturbed.
                v[i] = 1.0 - 0.1 * (rank + 1)
            else:
                v[i] = 1.0
                v[offset_axis] = round(0.1 * (rank + 1), 4)
    # Oracle check: brute-force neighbors match the intended lists.
    for label in LABELS:
        q = rows[label]
        ranked = sorted(
            (p for p in rows if p != label),
            key=lambda p: (-cosine(q, rows[p]), p),
        )
        assert set(ranked[:KNN_N]) == set(neighbors[label]), (label, ranked[:KNN_N])
        assert cosine(q, rows[ranked[KNN_N - 1]]) > cosine(q, rows[ranked[KNN_N]]), label
    return rows


def write_vectors(path, rows, header):
    dim = len(next(iter(rows.values())))
    out = [f"{len(rows)} {dim}\n"] if header else []
    for phrase in sorted(rows):
        comps = " ".join(f"{x:g}" for x in rows[phrase])
        out.append(f"{phrase.replace(' ', '_')} {comps}\n")
    path.write_text("".join(out))


# ---------------------------------------------------------------- ConceptNet

API_VERSION = "5.7"
RELATIONS = ["Synonym", "IsA", "FormOf", "SimilarTo"]

# (relation, other term, weight, query is start). Terms use ConceptNet's
# underscore form.
CONCEPTNET = {
    "batter": [("Synonym", "hitter", 2.0, True), ("Synonym", "batsman", 1.5, False), ("IsA", "ballplayer", 1.0, True),
               ("RelatedTo", "pancake", 1.0, True), ("Synonym", "fr:frappeur", 1.0, True)],
    "women": [("FormOf", "woman", 1.0, True), ("AtLocation", "mall", 1.0, True)],
    "road": [("Synonym", "street", 2.0, True), ("Synonym", "roadway", 1.0, False), ("Synonym", "route", 0.5, True),
             ("RelatedTo", "car", 2.0, True), ("Synonym", "fr:route", 2.0, False)],
    "teddy bear": [("IsA", "toy", 2.0, True), ("RelatedTo", "child", 1.0, True)],
    "woman": [("IsA", "female", 1.5, True), ("Synonym", "lady", 1.2, True), ("Antonym", "man", 3.0, True)],
    "man": [("IsA", "male", 1.5, True), ("Synonym", "guy", 1.0, True), ("Antonym", "woman", 3.0, True)],
    "bat": [("IsA", "club", 1.0, True), ("IsA", "mammal", 0.8, True)],
    "dog": [("IsA", "canine", 2.0, True), ("IsA", "pet", 1.5, True), ("RelatedTo", "puppy", 2.0, True)],
    "car": [("Synonym", "automobile", 3.0, True), ("Synonym", "auto", 2.0, True), ("IsA", "vehicle", 2.0, True)],
    "shirt": [("IsA", "garment", 1.0, True)],
    "table": [("IsA", "furniture", 2.0, True), ("SimilarTo", "desk", 1.0, True)],
    "tree": [("IsA", "plant", 2.0, True)],
    "grass": [("IsA", "plant", 1.5, True), ("SimilarTo", "lawn", 0.8, True)],
    "sky": [("Synonym", "heaven", 1.0, True), ("IsA", "atmosphere", 1.0, True)],
    "white": [("SimilarTo", "snowy", 1.0, True)],
    "red": [("SimilarTo", "crimson", 1.0, True), ("SimilarTo", "scarlet", 1.0, True)],
    "yes": [("Synonym", "yeah", 1.0, True), ("Synonym", "aye", 1.0, True)],
    "no": [("Synonym", "nope", 1.0, True), ("Synonym", "nay", 1.0, True)],
    "horse": [("IsA", "equine", 1.5, True), ("Synonym", "steed", 1.0, True)],
    "bus": [("Synonym", "coach", 1.5, True), ("Synonym", "omnibus", 1.5, True), ("IsA", "vehicle", 1.0, True)],
}


def concept(term):
    lang, _, word = term.rpartition(":")
    lang = lang or "en"
    return {
        "@id": f"/c/{lang}/{word}/n",
        "@type": "Node",
        "label": word.replace("_", " "),
        "language": lang,
        "sense_label": "n",
        "term": f"/c/{lang}/{word}",
    }


def edge(query, rel, other, weight, query_is_start):
    start, end = (concept(query), concept(other)) if query_is_start else (concept(other), concept(query))
    return {
        "@id": f"/a/[/r/{rel}/,{start['@id']}/,{end['@id']}/]",
        "@type": "Edge",
        "dataset": "/d/conceptnet/4/en",
        "end": end,
        "license": "cc:by-sa/4.0",
        "rel": {"@id": f"/r/{rel}", "@type": "Relation", "label": rel},
        "sources": [{"@id": "/s/contributor/omcs", "@type": "Source", "contributor": "/s/contributor/omcs"}],
        "start": start,
        "surfaceText": f"[[{start['label']}]] {rel} [[{end['label']}]]",
        "weight": weight,
    }


def conceptnet_pages(label):
    term = label.replace(" ", "_")
    edges = [edge(term, *e) for e in CONCEPTNET[label]]
    # Two pages for labels with many edges, to exercise pagination.
    split = 3 if len(edges) > 3 else len(edges)
    chunks = [edges[:split], edges[split:]] if split < len(edges) else [edges]
    pages = []
    for i, chunk in enumerate(chunks):
        view = {
            "@id": f"/c/en/{term}?offset={i * 3}&limit=1000",
            "@type": "PartialCollectionView",
            "firstPage": f"/c/en/{term}?offset=0&limit=1000",
            "paginatedProperty": "edges",
        }
        if i + 1 < len(chunks):
            view["nextPage"] = f"/c/en/{term}?offset={(i + 1) * 3}&limit=1000"
        pages.append({
            "@context": ["http://api.conceptnet.io/ld/conceptnet5.7/context.ld.json"],
            "@id": f"/c/en/{term}",
            "edges": chunk,
            "view": view,
        })
    return pages


def cache_path(cache_dir, label):
    key = f"{API_VERSION}\n{label}\n{','.join(RELATIONS)}"
    digest = hashlib.sha256(key.encode()).hexdigest()
    return cache_dir / "conceptnet" / API_VERSION / digest[:2] / f"{digest}.json"


def write_conceptnet(cache_dir):
    for label in LABELS:
        path = cache_path(cache_dir, label)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = {"api_version": API_VERSION, "label": label, "relations": RELATIONS, "pages": conceptnet_pages(label)}
        path.write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- mini dataset

QUESTIONS = [
    ("what is the batter holding?", "bat"), ("is the batter wearing a helmet?", "yes"),
    ("who is swinging the bat?", "batter"), ("who is standing near the catcher?", "batter"),
    ("are the women carrying bags?", "yes"), ("who is sitting on the bench?", "women"),
    ("are the women walking?", "yes"), ("who is on the road?", "man"),
    ("what is the car driving on?", "road"), ("is the road wet?", "no"),
    ("what is on the bed?", "teddy bear"), ("what color is the teddy bear?", "white"),
    ("is the teddy bear small?", "yes"), ("who is holding the umbrella?", "woman"),
    ("what is the woman wearing?", "shirt"), ("is the woman smiling?", "yes"),
    ("who is riding the horse?", "man"), ("what is the man holding?", "bat"),
    ("is the man tall?", "yes"), ("what is the dog lying on?", "grass"),
    ("what animal is on the leash?", "dog"), ("is the dog black?", "no"),
    ("what is parked near the tree?", "car"), ("what color is the car?", "red"),
    ("is the car new?", "yes"), ("what is the boy wearing?", "shirt"),
    ("what color is the shirt?", "white"), ("what is in front of the chair?", "table"),
    ("is the table wooden?", "yes"), ("what is next to the fence?", "tree"),
    ("is the tree tall?", "yes"), ("what is under the horse?", "grass"),
    ("is the grass green?", "yes"), ("what is above the tree?", "sky"),
    ("is the sky cloudy?", "no"), ("what color is the sky?", "white"),
    ("what color is the horse?", "white"), ("what color is the bus?", "red"),
    ("is the sign red?", "yes"), ("is the plate white?", "yes"),
    ("what animal is in the field?", "horse"), ("what vehicle is at the stop?", "bus"),
    ("is the bus full?", "no"), ("who is waiting for the bus?", "women"),
]


def write_mini(out, pred_rng):
    out.mkdir(parents=True, exist_ok=True)
    items = {}
    for i, (q, a) in enumerate(QUESTIONS):
        items[str(1000 + i)] = {"question": q, "answer": a, "imageId": f"n{3000 + i}"}
    # Every bundled label needs at least one question.
    answers = {a for _, a in QUESTIONS}
    assert set(LABELS) == answers, set(LABELS) ^ answers
    (out / "questions.json").write_text(json.dumps(items, indent=1) + "\n")
    preds = []
    for qid, item in items.items():
        a = item["answer"]
        choice = pred_rng.random()
        guess = a if choice < 0.5 else ("Street" if a == "road" and choice < 0.8 else "zebra")
        preds.append({"question_id": qid, "answer": guess})
    (out / "predictions.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))
    vocab = sorted({a for _, a in QUESTIONS} | {"street", "batsman", "hitter", "lady", "toy"})
    (out / "vocab.txt").write_text("".join(v + "\n" for v in vocab))


# ---------------------------------------------------------------- IoU fixture

IOU_AUTO = {
    "batter": ["batsman", "hitter", "ballplayer", "athlete"],
    "road": ["street", "route"],
    "teddy bear": ["toy"],
    "women": ["woman", "ladies"],
    "sky": [],
}
IOU_HUMAN = {
    # phrase → three votes
    "batter": {"batsman": "111", "hitter": "110", "ballplayer": "100", "athlete": "010", "slugger": "011"},
    "road": {"street": "111", "route": "101", "way": "000"},
    "teddy bear": {"toy": "001", "doll": "110", "stuffed animal": "111"},
    "women": {"woman": "000", "ladies": "001"},
    "sky": {"heaven": "100"},
}


def write_iou(out):
    out.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"metadata": {"tool": "aas", "k": 6, "k_includes_label": True, "threshold": 0.5}}) + "\n"]
    for label in sorted(IOU_AUTO):
        members = [{"phrase": label, "score": 1.0, "sources": ["groundtruth"]}]
        for r, p in enumerate(IOU_AUTO[label]):
            members.append({"phrase": p, "score": round(0.9 - 0.1 * r, 6), "sources": ["wordnet"]})
        members.sort(key=lambda m: (-m["score"], m["phrase"]))
        lines.append(json.dumps({"label": label, "members": members}) + "\n")
    (out / "auto.jsonl").write_text("".join(lines))
    ann = []
    for label in sorted(IOU_HUMAN):
        for phrase, votes in sorted(IOU_HUMAN[label].items()):
            ann.append({"label": label, "phrase": phrase, "votes": [v == "1" for v in votes]})
    (out / "human.jsonl").write_text("".join(json.dumps(a) + "\n" for a in ann))


# ---------------------------------------------------------------- golden 500

GOLDEN_WORDS = [
    "apple", "banana", "bench", "bike", "boat", "book", "bottle", "bowl", "box", "bread",
    "cake", "cat", "chair", "clock", "cow", "cup", "door", "elephant", "fence", "flower",
    "fork", "giraffe", "glass", "hat", "helmet", "kite", "lamp", "laptop", "motorcycle", "orange",
    "pizza", "plane", "plate", "sheep", "sign", "sink", "skateboard", "train", "umbrella", "zebra",
]


def write_golden(out, rng):
    """Random artifact and predictions; values are arbitrary but fixed."""
    out.mkdir(parents=True, exist_ok=True)
    filler = [f"{w}{s}" for w in GOLDEN_WORDS for s in ("", "s", " top", " side")]
    sets = {}
    for label in GOLDEN_WORDS:
        alts = rng.sample([f for f in filler if not f.startswith(label)], 9)
        scores = sorted((round(rng.uniform(0.5, 0.999999), 6) for _ in alts), reverse=True)
        members = [(label, 1.0)] + list(zip(alts, scores))
        members.sort(key=lambda m: (-m[1], m[0]))
        sets[label] = members
    lines = [json.dumps({"metadata": {"tool": "aas", "k": 10, "k_includes_label": True, "threshold": 0.5}}) + "\n"]
    for label in sorted(sets):
        members = [{"phrase": p, "score": s, "sources": ["groundtruth"] if p == label else ["bert-vec"]}
                   for p, s in sets[label]]
        lines.append(json.dumps({"label": label, "members": members}) + "\n")
    (out / "aas.jsonl").write_text("".join(lines))

    questions, preds = {}, []
    ids = rng.sample(range(1, 10_000_000), 500)
    for qid in ids:
        label = rng.choice(GOLDEN_WORDS)
        questions[str(qid)] = {"question": f"what is shown near the {label}?", "answer": label, "imageId": str(qid)}
        roll = rng.random()
        if roll < 0.35:
            guess = label
        elif roll < 0.45:
            guess = "  " + label.upper() + "."
        elif roll < 0.8:
            guess = rng.choice(sets[label][1:])[0]
            if rng.random() < 0.3:
                guess = guess.title() + "!"
        else:
            guess = rng.choice(filler)
        preds.append({"question_id": str(qid) if rng.random() < 0.8 else qid, "answer": guess})
    (out / "questions.json").write_text(json.dumps(questions, indent=1, sort_keys=True) + "\n")
    (out / "predictions.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))


# ---------------------------------------------------------------- contract

CONTRACT_PAIRS = [
    ("who is holding the bat?", "who is holding the bat?"),
    ("who is holding the bat?", "who is holding the banana?"),
    ("is the batter wearing a helmet?", "is the hitter wearing a helmet?"),
    ("there is a road in the picture.", "there is a street in the picture."),
]


def write_contract(out):
    out.mkdir(parents=True, exist_ok=True)
    request = {"pairs": [{"premise": p, "hypothesis": h} for p, h in CONTRACT_PAIRS]}
    response = {"scores": [0.987654, 0.012345, 0.901234, 0.765432]}
    (out / "score_request.json").write_text(json.dumps(request, indent=1) + "\n")
    (out / "score_response.json").write_text(json.dumps(response, indent=1) + "\n")
    (out / "health.json").write_text(json.dumps({"status": "ok", "model": "roberta-large-mnli"}, indent=1) + "\n")
    (out / "score_request_empty.json").write_text(json.dumps({"pairs": []}) + "\n")
    (out / "score_response_empty.json").write_text(json.dumps({"scores": []}) + "\n")


def main():
    n = write_wordnet(ROOT / "wordnet")
    print(f"wordnet: {n} synsets")
    (ROOT / "vectors").mkdir(exist_ok=True)
    write_vectors(ROOT / "vectors" / "bert-vec.txt", vector_table(BERT), header=True)
    write_vectors(ROOT / "vectors" / "counterfit-vec.txt", vector_table(COUNTERFIT), header=False)
    write_conceptnet(ROOT / "cache")
    write_mini(ROOT / "mini", random.Random(7))
    write_iou(ROOT / "iou")
    write_golden(ROOT / "golden", random.Random(20240501))
    write_contract(ROOT / "contract")
    (ROOT / "mini" / "build.toml").write_text(
        "# Settings for building the bundled mini vocabulary offline.\n"
        "k = 6\nthreshold = 0.5\nknn_n = 4\nhypernym_depth = 1\n"
        'sources = "wordnet,conceptnet,bert-vec,counterfit-vec"\n'
        'backend = "lexical"\noffline = true\n'
        'wordnet = "../wordnet"\n'
        'bert_vectors = "../vectors/bert-vec.txt"\n'
        'counterfit_vectors = "../vectors/counterfit-vec.txt"\n'
        'cache_dir = "../cache"\n'
    )


if __name__ == "__main__":
    main()
