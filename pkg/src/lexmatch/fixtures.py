"""Deterministic fixture corpora: a dictionary snapshot and two datasets.

* ``separable``: 32 sentence pairs whose label is decided by which pool the
  hypothesis object belongs to (linearly separable in bag-of-words), used to
  verify that training can drive train accuracy to 100%.

* ``knowledge``: 200 pairs built from invented object words whose category
  (musical instrument, wild animal, ...) is stated only in their dictionary
  definition. Test pairs use object words never seen in training, so the
  ablated text-only model has nothing to go on while the dictionary channel
  generalizes.

Run ``python -m lexmatch.fixtures OUTDIR`` to (re)write all files.
"""

from __future__ import annotations

import json
import os
import sys

import numpy as np

SEPARABLE_LABELS = {"entailment": 0, "neutral": 1, "contradiction": 2}
KNOWLEDGE_LABELS = {"entailment": 0, "contradiction": 1}

# Invented object words, grouped by the category named in their definition.
# The first 14 of each list are the training pool, the rest are test-only.
CATEGORIES: dict[str, dict] = {
    "instrument": {
        "phrase": "musical instrument",
        "definition": "A {adj} musical instrument that is played to produce music.",
        "nonces": [
            "zarimba", "velutron", "morlin", "quibrel", "sonevar", "triplix",
            "halvorn", "drenika", "pulvane", "ostrebi", "kelvino", "mirzuna",
            "farlote", "bintara", "crovell", "dulimer", "gravone", "harbeck",
            "jontive", "lurendo",
        ],
    },
    "animal": {
        "phrase": "wild animal",
        "definition": "A {adj} wild animal creature that lives in the forest.",
        "nonces": [
            "brovak", "felmuna", "gorsote", "harvink", "jelkara", "kromble",
            "lupenor", "mandrivel", "norvaki", "pelzor", "querand", "rovlim",
            "sarbuck", "tervino", "vulmarin", "wendrok", "yarbel", "zompira",
            "drellik", "fombard",
        ],
    },
    "vehicle": {
        "phrase": "wheeled vehicle",
        "definition": "A {adj} wheeled vehicle machine that is driven to travel on roads.",
        "nonces": [
            "carvetta", "dromblin", "farzeppel", "grintova", "hovelard",
            "jarvick", "klendor", "lorbine", "morvette", "nurgon", "porvalek",
            "quendrav", "rastibul", "sorvente", "trunevak", "vandrosk",
            "wervilo", "zorbinet", "brandiver", "culzone",
        ],
    },
    "fruit": {
        "phrase": "sweet fruit",
        "definition": "A {adj} sweet fruit that grows on trees and can be eaten as food.",
        "nonces": [
            "bablono", "cervina", "dramelo", "fignole", "grebusta", "hilvone",
            "jumaret", "kolvina", "lemprado", "morzula", "nectrino", "polvera",
            "pruneska", "quilbora", "rumbelo", "savrona", "tangevo", "vilmora",
            "wombrelo", "zentina",
        ],
    },
    "tool": {
        "phrase": "handheld tool",
        "definition": "A {adj} handheld tool device that is used to build and repair things.",
        "nonces": [
            "bramket", "clovenar", "drimshaw", "fargette", "grilpon",
            "hamdrek", "jorvel", "klamberg", "lorvik", "mervanto", "nulgrib",
            "pandrel", "quorvek", "rimkolo", "survane", "tervok", "vilbrant",
            "wrenkol", "zarvek", "duskell",
        ],
    },
}

TRAIN_NONCES_PER_CATEGORY = 14

ADJECTIVES = ["small", "large", "rare", "common", "old", "modern", "heavy",
              "light", "bright", "plain"]

# Definitions the category hypotheses retrieve. The "instrument" entry is the
# dictionary's first sense verbatim; the others are written so that every
# category shares distinctive content words with its object definitions.
CATEGORY_WORD_DEFS = {
    "instrument": "A device used to produce music.",
    "musical": "Related to music or to playing an instrument.",
    "animal": "A living creature that can move and lives in nature.",
    "wild": "Living in the forest or in nature and not tamed.",
    "vehicle": "A machine used to travel and carry people on roads.",
    "fruit": "A sweet food that grows on trees and can be eaten.",
    "sweet": "Having a pleasant taste like sugar and nice to eat.",
    "tool": "A device held in the hand and used to build or repair things.",
    "handheld": "Small enough to be held in the hand and used for work.",
}

COMMON_WORD_DEFS = {
    "sing": "To produce musical or harmonious sounds with one’s voice",
    "saxophone": (
        "A single-reed instrument musical instrument of the woodwind family, "
        "usually made of brass and with a distinctive loop bringing the bell "
        "upwards."
    ),
    "surf": "To ride on breaking waves toward the shore upon a surfboard.",
    "surfboard": "A long narrow board used for riding on waves.",
    "man": "An adult male human being.",
    "woman": "An adult female human being.",
    "girl": "A young female human being.",
    "boy": "A young male human being.",
    "person": "A human being regarded as an individual.",
    "child": "A young human being below the age of adulthood.",
    "blond": "Having pale yellow hair.",
    "hold": "To grasp or keep something in the hands.",
    "carry": "To move something while holding and supporting it.",
    "play": "To perform on a musical instrument or take part in a game.",
    "ride": "To sit on and travel upon an animal or vehicle while controlling it.",
    "wave": "A moving ridge of water on the surface of the sea.",
    "sea": "The large body of salt water that covers most of the earth.",
    "water": "A clear liquid that falls as rain and fills rivers and seas.",
    "music": "Sounds arranged in patterns that are pleasant to hear.",
    "sound": "Something that can be heard.",
    "voice": "The sound produced by a person when speaking or singing.",
    "guitar": "A stringed musical instrument played by plucking.",
    "piano": "A large keyboard musical instrument with hammered strings.",
    "drum": "A percussion musical instrument sounded by striking a membrane.",
    "dog": "A domesticated animal kept by people as a pet or for work.",
    "cat": "A small domesticated animal that purrs and catches mice.",
    "bird": "A feathered animal with wings that usually can fly.",
    "horse": "A large animal that people ride or use to pull loads.",
    "fish": "An animal that lives and swims in water.",
    "apple": "A round sweet fruit with firm white flesh.",
    "banana": "A long curved sweet fruit with a yellow skin.",
    "orange": "A round sweet citrus fruit with a tough orange skin.",
    "car": "A wheeled vehicle with an engine used to travel on roads.",
    "bus": "A large wheeled vehicle that carries many passengers.",
    "train": "A connected line of vehicles that runs on rails.",
    "boat": "A small vessel used to travel on water.",
    "hammer": "A handheld tool with a heavy head used to drive nails.",
    "knife": "A handheld tool with a sharp blade used for cutting.",
    "spoon": "A small tool with a shallow bowl used for eating.",
    "fork": "A small tool with pointed prongs used for eating.",
    "cup": "A small open container used for drinking.",
    "house": "A building in which people live.",
    "tree": "A tall plant with a wooden trunk and branches.",
    "forest": "A large area covered with trees and plants.",
    "road": "A wide way on which vehicles travel between places.",
    "street": "A public road in a city or town with buildings along it.",
    "city": "A large town where many people live and work.",
    "town": "A place with houses and shops where people live.",
    "garden": "A piece of ground where flowers or vegetables are grown.",
    "park": "A public area of grass and trees for walking and resting.",
    "school": "A place where children are taught.",
    "book": "A set of printed pages bound together for reading.",
    "paper": "Thin material made from wood used for writing on.",
    "pen": "A small tool used for writing with ink.",
    "table": "A piece of furniture with a flat top and legs.",
    "chair": "A piece of furniture made for one person to sit on.",
    "door": "A movable barrier used to close the entrance of a room.",
    "window": "An opening in a wall fitted with glass to let in light.",
    "wall": "An upright structure that encloses or divides a space.",
    "floor": "The surface of a room on which people walk.",
    "roof": "The structure that covers the top of a building.",
    "food": "Anything that people or animals eat to live.",
    "bread": "A baked food made from flour and water.",
    "milk": "A white liquid food produced by female mammals.",
    "sun": "The star that gives light and warmth to the earth.",
    "moon": "The natural body that circles the earth and shines at night.",
    "star": "A bright point of light seen in the night sky.",
    "sky": "The space above the earth where clouds and the sun appear.",
    "cloud": "A white or gray mass of water drops floating in the sky.",
    "rain": "Drops of water that fall from clouds.",
    "snow": "Soft white frozen water that falls from the sky in winter.",
    "wind": "Moving air that can be felt outdoors.",
    "fire": "The heat and light produced by something burning.",
    "earth": "The ground or soil, or the planet people live on.",
    "stone": "A small hard piece of rock.",
    "rock": "A large hard mass of mineral material.",
    "sand": "Tiny loose grains of worn rock found on beaches.",
    "beach": "A shore of sand or stones beside the sea.",
    "grass": "A common green plant with thin leaves covering the ground.",
    "flower": "The colored part of a plant from which seeds grow.",
    "leaf": "A flat green part that grows from the stem of a plant.",
    "branch": "A woody arm that grows out from the trunk of a tree.",
    "river": "A large natural stream of water flowing to the sea.",
    "lake": "A large area of water surrounded by land.",
    "mountain": "A very high hill with steep sides.",
    "hill": "A raised area of land lower than a mountain.",
    "field": "An open area of land used for crops or grass.",
    "farm": "Land and buildings used for growing crops and keeping animals.",
    "shirt": "A piece of clothing worn on the upper body.",
    "dress": "A one-piece garment worn by women and girls.",
    "hat": "A covering shaped to be worn on the head.",
    "shoe": "A covering worn on the foot.",
    "coat": "A warm outer garment with sleeves.",
    "ball": "A round object used in games and sports.",
    "game": "An activity with rules played for enjoyment.",
    "run": "To move quickly on foot.",
    "walk": "To move on foot at a steady pace.",
    "jump": "To push oneself off the ground into the air.",
    "swim": "To move through water by moving the body.",
    "dance": "To move the body in rhythm with music.",
    "eat": "To take food into the mouth and swallow it.",
    "drink": "To take liquid into the mouth and swallow it.",
    "sleep": "To rest with the eyes closed and the mind unconscious.",
    "see": "To notice something with the eyes.",
    "hear": "To notice a sound with the ears.",
    "speak": "To say words with the voice.",
    "laugh": "To make sounds showing that something is funny.",
    "smile": "To curve the mouth upward to show pleasure.",
    "cry": "To produce tears from the eyes because of emotion.",
    "work": "Activity done to achieve a result or earn money.",
    "build": "To make something by putting parts together.",
    "repair": "To restore something broken to good condition.",
    "make": "To create or produce something.",
    "produce": "To make or bring something into existence.",
    "travel": "To go from one place to another.",
    "drive": "To operate and control a vehicle.",
    "wear": "To have clothing on the body.",
    "taste": "The flavor of something sensed in the mouth.",
    "sugar": "A sweet substance used to make food and drinks sweet.",
    "wheel": "A round frame that turns so a vehicle can be driven on roads.",
    "machine": "A device with moving parts that does work.",
    "device": "An object made for a particular purpose.",
    "creature": "A living being, especially an animal.",
    "nature": "The world of plants, animals, and the land.",
    "thing": "An object that is not named exactly.",
    "hand": "The part of the body at the end of the arm.",
    "brass": "A bright yellow metal made of copper and zinc.",
    "reed": "A thin strip that vibrates to make sound in some instruments.",
    "bell": "A hollow metal object that rings when struck.",
    "band": "A group of people who play music together.",
    "song": "A short piece of music with words that are sung.",
}


def dictionary_records() -> list[tuple[str, list[str]]]:
    """All fixture dictionary entries, in a stable order."""
    records: list[tuple[str, list[str]]] = []
    for word, definition in COMMON_WORD_DEFS.items():
        records.append((word, [definition]))
    for word, definition in CATEGORY_WORD_DEFS.items():
        records.append((word, [definition]))
    for spec in CATEGORIES.values():
        for i, nonce in enumerate(spec["nonces"]):
            adj = ADJECTIVES[i % len(ADJECTIVES)]
            records.append((nonce, [spec["definition"].format(adj=adj)]))
    return records


def write_dictionary(path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# fixture dictionary snapshot: one JSON record per line\n")
        for lemma, defs in dictionary_records():
            fh.write(json.dumps({"lemma": lemma, "defs": defs}, ensure_ascii=False))
            fh.write("\n")


SUBJECTS = ["man", "woman", "girl", "boy", "person"]
VERBS = ["holding", "carrying"]


def _sentence(subj: str, verb: str, obj_phrase: str) -> str:
    return f"the {subj} is {verb} a {obj_phrase}"


def separable_pairs(seed: int = 7) -> list[tuple[str, str, str]]:
    """32 pairs labeled by the pool of the hypothesis object: entailment
    repeats the premise verbatim, the other labels swap in an object from a
    label-specific pool."""
    entail_objs = ["guitar", "piano", "drum", "apple"]
    shared_objs = ["book", "ball", "hat", "cup", "shoe", "coat"]
    contra_objs = ["knife", "hammer", "spoon", "fork"]
    neutral_objs = ["flower", "stone", "leaf", "branch"]
    rng = np.random.default_rng(seed)
    rows = []
    for label, count in (("entailment", 11), ("contradiction", 11), ("neutral", 10)):
        for _ in range(count):
            subj = SUBJECTS[rng.integers(len(SUBJECTS))]
            verb = VERBS[rng.integers(len(VERBS))]
            if label == "entailment":
                obj = entail_objs[rng.integers(len(entail_objs))]
                premise = hypothesis = _sentence(subj, verb, obj)
            else:
                premise = _sentence(subj, verb, shared_objs[rng.integers(len(shared_objs))])
                pool = contra_objs if label == "contradiction" else neutral_objs
                hypothesis = _sentence(subj, verb, pool[rng.integers(len(pool))])
            rows.append((label, premise, hypothesis))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


def knowledge_pairs(
    seed: int = 11, n_train: int = 150, n_test: int = 50
) -> tuple[list[tuple[str, str, str]], list[tuple[str, str, str]]]:
    """Object-category pairs whose label needs the dictionary: entailment when
    the hypothesis names the premise object's category, contradiction when it
    names another. Test pairs only use held-out object words."""
    rng = np.random.default_rng(seed)
    names = list(CATEGORIES)

    def make_rows(n: int, test: bool) -> list[tuple[str, str, str]]:
        rows = []
        for i in range(n):
            cat = names[int(rng.integers(len(names)))]
            pool = CATEGORIES[cat]["nonces"]
            pool = pool[TRAIN_NONCES_PER_CATEGORY:] if test else pool[:TRAIN_NONCES_PER_CATEGORY]
            nonce = pool[int(rng.integers(len(pool)))]
            entail = i % 2 == 0
            if entail:
                hyp_cat = cat
            else:
                others = [c for c in names if c != cat]
                hyp_cat = others[int(rng.integers(len(others)))]
            subj = SUBJECTS[int(rng.integers(len(SUBJECTS)))]
            verb = VERBS[int(rng.integers(len(VERBS)))]
            rows.append(
                (
                    "entailment" if entail else "contradiction",
                    _sentence(subj, verb, nonce),
                    _sentence(subj, verb, CATEGORIES[hyp_cat]["phrase"]),
                )
            )
        order = rng.permutation(len(rows))
        return [rows[j] for j in order]

    return make_rows(n_train, test=False), make_rows(n_test, test=True)


def write_tsv(path: str, rows: list[tuple[str, str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label, premise, hypothesis in rows:
            fh.write(f"{label}\t{premise}\t{hypothesis}\n")


def write_label_map(path: str, mapping: dict[str, int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, idx in sorted(mapping.items(), key=lambda kv: kv[1]):
            fh.write(f"{name}\t{idx}\n")


def write_all(outdir: str) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    written = []

    def out(name: str) -> str:
        path = os.path.join(outdir, name)
        written.append(path)
        return path

    write_dictionary(out("dictionary.jsonl"))
    write_tsv(out("separable_train.tsv"), separable_pairs())
    write_label_map(out("separable_labels.tsv"), SEPARABLE_LABELS)
    train_rows, test_rows = knowledge_pairs()
    write_tsv(out("knowledge_train.tsv"), train_rows)
    write_tsv(out("knowledge_test.tsv"), test_rows)
    write_label_map(out("knowledge_labels.tsv"), KNOWLEDGE_LABELS)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    for path in write_all(target):
        print(path)
