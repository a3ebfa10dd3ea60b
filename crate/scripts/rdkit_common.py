"""Shared helpers for generating reference fixtures with RDKit."""

import csv
import os

from rdkit import Chem, RDConfig, RDLogger

RDLogger.DisableLog("rdApp.*")

NCI_CORPUS = os.path.join(RDConfig.RDDataDir, "NCI", "first_5K.smi")
WEHI_PAINS = os.path.join(RDConfig.RDDataDir, "Pains", "wehi_pains.csv")


def largest_fragment(mol):
    """Largest fragment by heavy-atom count; ties go to the earliest fragment."""
    frags = Chem.GetMolFrags(mol, asMols=True, sanitizeFrags=True)
    best = None
    for f in frags:
        if best is None or f.GetNumAtoms() > best.GetNumAtoms():
            best = f
    return best


def read_nci():
    out = []
    with open(NCI_CORPUS) as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts and parts[0]:
                out.append((parts[1] if len(parts) > 1 else "", parts[0]))
    return out


def canonical_single_fragment(smiles):
    mol = Chem.MolFromSmiles(smiles)
    if mol is None or mol.GetNumAtoms() == 0:
        return None
    frag = largest_fragment(mol)
    return Chem.MolToSmiles(frag)


def wehi_patterns():
    with open(WEHI_PAINS) as fh:
        return [(name.strip("<>").replace("regId=", ""), smarts) for smarts, name in csv.reader(fh)]


def match_union(mol, query):
    """Union over all embeddings of matched atoms and of bonds hit by query bonds."""
    atoms, bonds = set(), set()
    maps = mol.GetSubstructMatches(query, uniquify=False, maxMatches=100000)
    atom_sets = set()
    for mp in maps:
        atom_sets.add(tuple(sorted(mp)))
        atoms.update(mp)
        for qb in query.GetBonds():
            b = mol.GetBondBetweenAtoms(mp[qb.GetBeginAtomIdx()], mp[qb.GetEndAtomIdx()])
            a, c = sorted((b.GetBeginAtomIdx(), b.GetEndAtomIdx()))
            bonds.add((a, c))
    return sorted(atom_sets), atoms, bonds
