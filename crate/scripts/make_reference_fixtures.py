#!/usr/bin/env python3
"""Regenerates the committed reference fixtures with RDKit.

Outputs (relative to the repository root):

  crates/core/tests/fixtures/pains_reference.tsv
      pattern name, molecule SMILES, expected atom-index sets (JSON)
  crates/core/tests/fixtures/labeling_corpus.smi
  crates/core/tests/fixtures/labeling_reference.jsonl
      200 molecules and their task labels/masks computed with RDKit
  crates/core/tests/fixtures/corpus_1000.smi
      first 1000 lines of the NCI sample shipped with RDKit (raw, with salts)

The molecule pool is the NCI sample plus the small ChEMBL extracts bundled in
RDKit's Contrib directory, canonicalised to their largest fragment, plus one
synthetic positive per PAINS alert built from the alert's SMARTS.

Usage: python3 scripts/make_reference_fixtures.py
"""

import json
import os
import re
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rdkit import Chem, RDConfig  # noqa: E402

from rdkit_common import (  # noqa: E402
    NCI_CORPUS,
    canonical_single_fragment,
    match_union,
    read_nci,
)

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(ROOT, "crates", "core", "tests", "fixtures")
PAINS_ASSET = os.path.join(ROOT, "crates", "core", "assets", "pains.txt")
INDOLE_SMARTS = "c1ccc2c(c1)ccn2"
HALOGENS = {"F", "Cl", "Br", "I"}
RING_COUNT_THRESHOLD = 4
RING_SIZE_THRESHOLD = 6
CONTRIB = [
    "FreeWilson/data/CHEMBL2321810.smi",
    "fraggle/data/ChEMBL_11265_actives.smi",
    "Fastcluster/cdk2.smi",
]


def read_pains():
    out = []
    with open(PAINS_ASSET) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            name, smarts = line.split("\t")
            out.append((name, smarts))
    return out


def positive_from_smarts(smarts):
    """Builds a concrete molecule from an alert by taking the first
    alternative of every atom and bond expression."""

    def bracket(m):
        body = m.group(1)
        first = re.split(r"[;,&]", body)[0].replace("!", "")
        num = re.match(r"#(\d+)", first)
        if num:
            sym = Chem.GetPeriodicTable().GetElementSymbol(int(num.group(1)))
        else:
            sym = re.match(r"[A-Za-z][a-z]?", first).group(0)
        charge = re.search(r"([+-]\d?)", body)
        return "[" + sym + (charge.group(1) if charge else "") + "]"

    s = re.sub(r"\[([^\]]*)\]", bracket, smarts)
    s = re.sub(r"([-=#:~@!]+,[-=#:~@!,]*)", lambda m: m.group(1).split(",")[0], s)
    s = s.replace("~", "-").replace("!@", "-").replace("@", "")
    query = Chem.MolFromSmarts(smarts)
    for candidate in (s, s.replace("[", "").replace("]", "")):
        mol = Chem.MolFromSmiles(candidate)
        if mol is None:
            mol = Chem.MolFromSmiles(candidate, sanitize=False)
            try:
                Chem.SanitizeMol(
                    mol, Chem.SanitizeFlags.SANITIZE_ALL ^ Chem.SanitizeFlags.SANITIZE_PROPERTIES
                )
                mol = Chem.MolFromSmiles(Chem.MolToSmiles(mol))
            except Exception:
                mol = None
        if mol is not None and mol.HasSubstructMatch(query):
            return Chem.MolToSmiles(mol)
    return None


def build_pool(pains):
    seen, pool = set(), []

    def add(smiles):
        c = canonical_single_fragment(smiles)
        if c and c not in seen and Chem.MolFromSmiles(c) is not None:
            seen.add(c)
            pool.append(c)

    for _, smi in read_nci():
        add(smi)
    for rel in CONTRIB:
        with open(os.path.join(RDConfig.RDContribDir, rel)) as fh:
            for line in fh:
                parts = line.split()
                if parts:
                    add(parts[0])
    for _, smarts in pains:
        pos = positive_from_smarts(smarts)
        if pos:
            add(pos)
    # the bundled sets contain no organoboron compounds
    for smi in [
        "OB(O)c1ccccc1",
        "CC1(C)OB(c2ccc(N)cc2)OC1(C)C",
        "OB(O)c1cccc(C(=O)O)c1",
        "CC(C)C[C@H](NC(=O)[C@@H](Cc1ccccc1)NC(=O)c1cnccn1)B(O)O",
        "OB1OCc2cc(F)ccc21",
        "OB(O)c1ccc2[nH]ccc2c1",
        "OB(O)c1cccc2ccccc12",
        "B1(O)OC(C)(C)C(C)(C)O1",
        "OB(O)C=Cc1ccccc1",
        "Cc1ccc(B(O)O)cc1Cl",
    ]:
        add(smi)
    return pool


def ring_bonds(mol, ring):
    out = set()
    for i in range(len(ring)):
        a, b = ring[i], ring[(i + 1) % len(ring)]
        out.add(tuple(sorted((a, b))))
    return out


def reference_labels(mol, pains_queries, indole_query):
    tasks = {}
    for task, elements in (("B", {"B"}), ("P", {"P"}), ("X", HALOGENS)):
        atoms = [a.GetIdx() for a in mol.GetAtoms() if a.GetSymbol() in elements]
        tasks[task] = {"label": bool(atoms), "atoms": atoms, "bonds": None}

    _, atoms, bonds = match_union(mol, indole_query)
    tasks["indole"] = {"label": bool(atoms), "atoms": sorted(atoms), "bonds": sorted(bonds)}

    atoms, bonds = set(), set()
    for q in pains_queries:
        _, a, b = match_union(mol, q)
        atoms |= a
        bonds |= b
    tasks["PAINS"] = {"label": bool(atoms), "atoms": sorted(atoms), "bonds": sorted(bonds)}

    sssr = [list(r) for r in Chem.GetSSSR(mol)]
    ring_atoms = sorted({a for r in sssr for a in r})
    all_ring_bonds = set()
    for r in sssr:
        all_ring_bonds |= ring_bonds(mol, r)
    tasks["rings-count"] = {
        "label": len(sssr) > RING_COUNT_THRESHOLD,
        "atoms": ring_atoms,
        "bonds": sorted(all_ring_bonds),
    }
    large = [r for r in sssr if len(r) > RING_SIZE_THRESHOLD]
    if large:
        lb = set()
        for r in large:
            lb |= ring_bonds(mol, r)
        tasks["rings-max"] = {
            "label": True,
            "atoms": sorted({a for r in large for a in r}),
            "bonds": sorted(lb),
        }
    else:
        tasks["rings-max"] = {"label": False, "atoms": ring_atoms, "bonds": sorted(all_ring_bonds)}
    for t in tasks.values():
        if t["bonds"] is not None:
            t["bonds"] = [list(b) for b in t["bonds"]]
    return tasks


def select_labeling_corpus(pool, pains_queries, indole_query, size=200):
    quotas = {
        "B": 10,
        "P": 20,
        "X": 25,
        "indole": 25,
        "PAINS": 30,
        "rings-count": 25,
        "rings-max": 20,
    }
    taken, chosen = {k: 0 for k in quotas}, []
    filler = []
    for smi in pool:
        mol = Chem.MolFromSmiles(smi)
        labels = reference_labels(mol, pains_queries, indole_query)
        wanted = [t for t in quotas if labels[t]["label"] and taken[t] < quotas[t]]
        if wanted:
            for t in quotas:
                if labels[t]["label"]:
                    taken[t] += 1
            chosen.append((smi, labels))
        elif labels["rings-count"]["atoms"] == [] and len(filler) < 30:
            filler.append((smi, labels))
        elif len(filler) < size:
            filler.append((smi, labels))
    # acyclic molecules first so ring-task null explanations are represented
    filler.sort(key=lambda x: bool(x[1]["rings-count"]["atoms"]))
    for item in filler:
        if len(chosen) >= size:
            break
        chosen.append(item)
    return chosen[:size]


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    pains = read_pains()
    pains_queries = [Chem.MolFromSmarts(s) for _, s in pains]
    indole_query = Chem.MolFromSmarts(INDOLE_SMARTS)
    pool = build_pool(pains)
    mols = [Chem.MolFromSmiles(s) for s in pool]

    with open(os.path.join(FIXTURES, "pains_reference.tsv"), "w") as fh:
        fh.write("# pattern\tsmiles\texpected atom sets (RDKit, all embeddings, deduplicated)\n")
        for (name, _), q in zip(pains, pains_queries):
            negatives = 0
            for smi, mol in zip(pool, mols):
                sets, _, _ = match_union(mol, q)
                if sets:
                    fh.write(f"{name}\t{smi}\t{json.dumps([list(s) for s in sets])}\n")
                elif negatives < 3 and mol.GetNumAtoms() > 15:
                    negatives += 1
                    fh.write(f"{name}\t{smi}\t[]\n")

    chosen = select_labeling_corpus(pool, pains_queries, indole_query)
    with open(os.path.join(FIXTURES, "labeling_corpus.smi"), "w") as fh:
        for i, (smi, _) in enumerate(chosen):
            fh.write(f"{smi}\tfx{i:03d}\n")
    with open(os.path.join(FIXTURES, "labeling_reference.jsonl"), "w") as fh:
        for i, (smi, labels) in enumerate(chosen):
            fh.write(json.dumps({"id": f"fx{i:03d}", "smiles": smi, "tasks": labels}, sort_keys=True) + "\n")

    with open(NCI_CORPUS) as src, open(os.path.join(FIXTURES, "corpus_1000.smi"), "w") as dst:
        for i, line in enumerate(src):
            if i >= 1000:
                break
            dst.write(line)


if __name__ == "__main__":
    main()
