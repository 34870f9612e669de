#!/usr/bin/env python3
"""Regenerates the bundled fixture data under data/.

Outputs:
  toy_corpus.smi      2000 distinct drug-like SMILES strings (organic subset)
  panel_train.json    64 synthetic training-panel profiles
  panel_verify.json   128 held-out verification-panel profiles
  targets.json        target profiles (a default and a hard one)

Everything is derived from fixed seeds, so rerunning reproduces the files
byte for byte. Usage: python3 scripts/make_fixtures.py [output_dir]
"""

import json
import random
import sys
from pathlib import Path

CORPUS_SIZE = 2000
MAX_TOKENS = 100
FEATURES = 8

# Ring templates: (atoms, substitutable positions). Atoms are written in ring
# order; substituents go on carbons only, so valences stay in range.
RINGS = [
    (["c", "c", "c", "c", "c", "c"], [0, 1, 2, 3, 4, 5]),
    (["c", "c", "c", "n", "c", "c"], [0, 1, 2, 4, 5]),
    (["c", "n", "c", "c", "n", "c"], [0, 2, 3, 5]),
    (["C", "C", "C", "C", "C", "C"], [0, 1, 2, 3, 4, 5]),
    (["C", "C", "N", "C", "C"], [0, 1, 3, 4]),
    (["C", "C", "O", "C", "C", "C"], [0, 1, 3, 4, 5]),
    (["C", "C", "N", "C", "C", "N"], [0, 1, 3, 4]),
    (["C", "C", "C"], [0, 1, 2]),
    (["C", "C", "C", "C", "C"], [0, 1, 2, 3, 4]),
]

TERMINALS = ["C", "C", "O", "N", "F", "Cl", "Br", "C(=O)O", "C(=O)N", "C#N", "OC", "N(C)C", "S", "C(F)(F)F", "I"]
CHAIN_ATOMS = ["C", "C", "C", "N", "O", "S"]


def tokens(smiles):
    out, i = [], 0
    while i < len(smiles):
        two = smiles[i : i + 2]
        if two in ("Cl", "Br"):
            out.append(two)
            i += 2
        elif smiles[i] == "%":
            out.append(smiles[i : i + 3])
            i += 3
        else:
            out.append(smiles[i])
            i += 1
    return out


class Builder:
    def __init__(self, rng):
        self.rng = rng
        self.label = 0

    def next_label(self):
        self.label += 1
        return str(self.label) if self.label < 10 else "%" + str(self.label)

    def ring(self, depth):
        atoms, positions = self.rng.choice(RINGS)
        label = self.next_label()
        subs = {}
        # The first and last ring atoms carry the links to neighbouring groups.
        free = [p for p in positions if p not in (0, len(atoms) - 1)]
        for p in self.rng.sample(free, k=min(len(free), self.rng.choice([0, 1, 1, 2, 2, 3]))):
            subs[p] = self.group(depth + 1)
        parts = []
        for i, a in enumerate(atoms):
            parts.append(a)
            if i == 0:
                parts.append(label)
            if i == len(atoms) - 1:
                parts.append(label)
            if i in subs:
                parts.append("(" + subs[i] + ")")
        return "".join(parts)

    def chain(self, depth, length):
        parts = []
        for i in range(length):
            atom = self.rng.choice(CHAIN_ATOMS)
            parts.append(atom)
            if atom == "C" and self.rng.random() < 0.15 and depth < 3:
                parts.append("(" + self.rng.choice(["=O", "C", "O", "N", "F"]) + ")")
        return "".join(parts)

    def group(self, depth):
        r = self.rng.random()
        if depth >= 2 or r < 0.45:
            return self.rng.choice(TERMINALS)
        if r < 0.7:
            return self.chain(depth, self.rng.randint(1, 3)) + self.rng.choice(["", "", "O", "N", "C"])
        return self.chain(depth, self.rng.randint(0, 2)) + self.ring(depth)

    def molecule(self):
        self.label = 0
        parts = []
        if self.rng.random() < 0.7:
            parts.append(self.rng.choice(TERMINALS[:5]) if self.rng.random() < 0.5 else "")
            parts.append(self.ring(0))
            if self.rng.random() < 0.6:
                parts.append(self.chain(1, self.rng.randint(0, 3)))
                parts.append(self.ring(1) if self.rng.random() < 0.5 else self.rng.choice(TERMINALS))
        else:
            parts.append(self.chain(0, self.rng.randint(2, 8)))
            if self.rng.random() < 0.5:
                parts.append(self.ring(1))
        return "".join(parts)


def valid_shape(smiles):
    # Chains can end in a group that starts with a branch; reject those and
    # anything over the token limit. Full validation happens in the test suite.
    if not smiles or smiles[0] in "(=#)" or "()" in smiles:
        return False
    return len(tokens(smiles)) <= MAX_TOKENS


def corpus(seed=20240611):
    rng = random.Random(seed)
    b = Builder(rng)
    seen, out = set(), []
    while len(out) < CORPUS_SIZE:
        s = b.molecule()
        if valid_shape(s) and s not in seen:
            seen.add(s)
            out.append(s)
    return out


def profiles(seed, n, prefix, scale=1.0):
    rng = random.Random(seed)
    return [
        {"id": f"{prefix}-{i:03d}", "features": [round(rng.gauss(0.0, 1.0) * scale, 6) for _ in range(FEATURES)]}
        for i in range(n)
    ]


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# Toy corpus generated by scripts/make_fixtures.py; one SMILES per line."] + corpus()
    (out / "toy_corpus.smi").write_text("\n".join(lines) + "\n")
    (out / "panel_train.json").write_text(json.dumps(profiles(101, 64, "train"), indent=1) + "\n")
    (out / "panel_verify.json").write_text(json.dumps(profiles(202, 128, "verify"), indent=1) + "\n")
    # Seed 2021: the prior calibrates into the band with a negative theta_z, and
    # no small acyclic molecule reaches the winning region, so winners need rings.
    default = profiles(2021, 1, "target-default")[0]
    default["id"] = "target-default"
    hard = profiles(404, 1, "target-hard", scale=0.25)[0]
    hard["id"] = "target-hard"
    (out / "targets.json").write_text(json.dumps([default, hard], indent=1) + "\n")


if __name__ == "__main__":
    main()
