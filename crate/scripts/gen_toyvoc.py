#!/usr/bin/env python3
"""Regenerate the toy byte-level vocabulary and its companion fixture files.

Writes into crates/core/assets/:
  toyvoc.json    byte-level vocabulary (GPT-2 printable-byte convention)
  lexicon.tsv    fixture lexicon with corpus sampling weights
  synonyms.json  replacement map used by the simulator

Run from the repository root: python3 scripts/gen_toyvoc.py
"""
import json
import os

ASSETS = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "assets")


def bytes_to_unicode():
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return {b: chr(c) for b, c in zip(bs, cs)}


# word -> (weight, pieces, extra tokens)
# Category A: both " W" and "W" exist.
CAT_A = {
    "February": ["Feb", "ruary"],
    "Saturday": ["Satur", "day"],
    "Guy": ["uy"],
    "However": ["How", "ever"],
    "Campaign": ["Camp", "aign"],
    "Monday": ["Mon", "day", " Mon"],
    "London": ["Lon", "don"],
    "Scotland": ["Scot", "land"],
    "government": ["govern", "ment"],
    "people": ["peo", "ple"],
    "minister": ["mini", "ster"],
    "council": ["coun", "cil"],
    "police": ["pol", "ice"],
    "report": ["re", "port"],
    "company": ["com", "pany"],
    "market": ["mark", "et"],
    "water": ["wat", "er"],
    "school": ["sch", "ool"],
    "weekend": ["week", "end"],
    "president": ["pre", "sident"],
    "million": ["mill", "ion"],
    "season": ["sea", "son"],
    "football": ["foot", "ball"],
    "hospital": ["hos", "pital"],
    "village": ["vill", "age"],
    "money": ["mon", "ey"],
    "family": ["fam", "ily"],
    "year": [],
    "city": [],
    "NATO": ["NA", "TO", "NAT", "ATO"],
}
# Category B: only " W" exists as a whole-word token.
CAT_B = {
    "unbelievable": ["un", "bel", "ievable"],
    "repaid": ["re", "paid"],
    "rights": ["right", " right", "s"],
    "smooth": ["s", "mooth"],
    "players": ["player", "play", " play", "ers", "er", "s"],
    "reported": ["report", "ed", "re", "ported"],
    "unhappy": ["un", "happy", "hap", "py"],
    "discover": ["dis", "cover"],
    "walking": ["walk", "ing"],
    "quickly": ["quick", "ly"],
    "preview": ["pre", "view"],
    "teachers": ["teacher", "teach", "ers", "er", "s"],
}
# Category C: proper nouns whose canonical encoding is already fragmented.
CAT_C = {
    "Jubilee": [" Jub", "ilee", "ub", "Jubilee", "Ju", "bilee"],
    "Dormer": [" Dorm", "er", "orm", "Dormer", "Dor", "mer"],
    "Clements": [" Clement", "s", "lements", "Clements"],
    "Edinburgh": [" Edin", "burgh", "din", "Edinburgh", "Ed", "inburgh"],
    "Kowalski": [" Kow", "alski", "ow", "Kowalski", "Ko", "walski"],
    "Wimbledon": [" Wimble", "don", "imble", "Wimbledon", "Wim", "bledon"],
    "Macron": [" Mac", "ron", "ac", "Macron", "Ma", "cron"],
}
# Category D: acronyms.
CAT_D = {
    "HIV": ["HI", "IV"],
    "BBC": ["BB", "BC"],
    "NHS": ["NH", "HS"],
    "UEFA": ["UE", "FA", "EFA"],
}

WEIGHTS = {"A": 4.0, "B": 1.2, "C": 2.0, "D": 2.0}

SYNONYMS = {
    "February": "March", "Saturday": "Sunday", "Guy": "Tom", "However": "Still",
    "Campaign": "Drive", "Monday": "Tuesday", "London": "Paris", "Scotland": "Wales",
    "government": "state", "people": "folk", "minister": "official", "council": "board",
    "police": "officers", "report": "account", "company": "firm", "market": "bazaar",
    "water": "liquid", "school": "academy", "weekend": "holiday", "president": "leader",
    "million": "billion", "season": "period", "football": "soccer", "hospital": "clinic",
    "village": "hamlet", "money": "cash", "family": "household", "year": "decade",
    "city": "town", "NATO": "alliance",
    "unbelievable": "incredible", "repaid": "refunded", "rights": "freedoms",
    "smooth": "silky", "players": "athletes", "reported": "stated", "unhappy": "sad",
    "discover": "find", "walking": "strolling", "quickly": "rapidly", "preview": "trailer",
    "teachers": "tutors",
    "Jubilee": "Festival", "Dormer": "Window", "Clements": "Roberts",
    "Edinburgh": "Glasgow", "Kowalski": "Nowak", "Wimbledon": "Queens", "Macron": "Chirac",
    "HIV": "virus", "BBC": "broadcaster", "NHS": "healthcare", "UEFA": "FIFA",
    "get": "receive",
}


def main():
    b2u = bytes_to_unicode()
    tokens = []
    seen = set()

    def add(surface):
        if surface in seen:
            return
        seen.add(surface)
        tokens.append(surface)

    for b in range(256):
        add(bytes([b]).decode("latin-1"))

    for word, pieces in CAT_A.items():
        add(" " + word)
        add(word)
        for p in pieces:
            add(p)
    for word, pieces in CAT_B.items():
        add(" " + word)
        for p in pieces:
            add(p)
    for word, pieces in CAT_C.items():
        for p in pieces:
            add(p)
    for word, pieces in CAT_D.items():
        add(" " + word)
        for p in pieces:
            add(p)
    for word, repl in SYNONYMS.items():
        add(" " + repl)
    for extra in [" get", "get", " receive", "\n\n"]:
        add(extra)
    with open(os.path.join(ASSETS, "stopwords_en.txt")) as f:
        for line in f:
            w = line.strip()
            if w and not w.startswith("#"):
                add(" " + w)

    def encode_surface(s):
        raw = s.encode("latin-1") if all(ord(c) < 256 for c in s) else s.encode("utf-8")
        return "".join(b2u[b] for b in raw)

    doc = {
        "mode": "byte-level",
        "normalize_whitespace": False,
        "tokens": [encode_surface(t) for t in tokens],
    }
    with open(os.path.join(ASSETS, "toyvoc.json"), "w") as f:
        json.dump(doc, f, ensure_ascii=False, indent=0)
        f.write("\n")

    with open(os.path.join(ASSETS, "lexicon.tsv"), "w") as f:
        f.write("# word\tweight\n")
        for cat, table in (("A", CAT_A), ("B", CAT_B), ("C", CAT_C), ("D", CAT_D)):
            for word in table:
                f.write(f"{word}\t{WEIGHTS[cat]}\n")

    with open(os.path.join(ASSETS, "synonyms.json"), "w") as f:
        json.dump({k: [v] for k, v in SYNONYMS.items()}, f, indent=1, sort_keys=True)
        f.write("\n")

    print(f"{len(tokens)} tokens")


if __name__ == "__main__":
    main()
