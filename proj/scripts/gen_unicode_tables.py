#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from the unicodedata module.

The tables drive canonical composition (NFC) in src/normalize.cpp:
  - full canonical decompositions (recursively expanded, Hangul excluded)
  - nonzero canonical combining classes
  - primary composition pairs (composition exclusions filtered by checking
    each candidate against unicodedata.normalize)
"""

import sys
import unicodedata

MAX_CP = 0x110000
S_BASE, L_COUNT, V_COUNT, T_COUNT = 0xAC00, 19, 21, 28
S_COUNT = L_COUNT * V_COUNT * T_COUNT


def is_hangul_syllable(cp):
    return S_BASE <= cp < S_BASE + S_COUNT


def canonical_decomposition(cp):
    raw = unicodedata.decomposition(chr(cp))
    if not raw or raw.startswith("<"):
        return None
    return [int(part, 16) for part in raw.split()]


def full_decomposition(cp, memo):
    if cp in memo:
        return memo[cp]
    parts = canonical_decomposition(cp)
    if parts is None:
        memo[cp] = [cp]
        return memo[cp]
    out = []
    for part in parts:
        out.extend(full_decomposition(part, memo))
    memo[cp] = out
    return out


def main(out_path):
    memo = {}
    decomp = {}
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF or is_hangul_syllable(cp):
            continue
        full = full_decomposition(cp, memo)
        if full != [cp]:
            decomp[cp] = full

    ccc = {}
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        c = unicodedata.combining(chr(cp))
        if c:
            ccc[cp] = c

    pairs = {}
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF or is_hangul_syllable(cp):
            continue
        parts = canonical_decomposition(cp)
        if parts is None or len(parts) != 2:
            continue
        a, b = parts
        if unicodedata.normalize("NFC", chr(a) + chr(b)) == chr(cp):
            pairs[(a, b)] = cp

    seq_data = []
    decomp_entries = []
    for cp in sorted(decomp):
        seq = decomp[cp]
        decomp_entries.append((cp, len(seq), len(seq_data)))
        seq_data.extend(seq)

    with open(out_path, "w") as f:
        f.write("// Generated by scripts/gen_unicode_tables.py (unicodedata %s). Do not edit.\n"
                % unicodedata.unidata_version)
        f.write("// clang-format off\n")

        f.write("static const uint32_t kDecompSeq[] = {\n")
        for i in range(0, len(seq_data), 12):
            f.write("  " + ",".join("0x%X" % v for v in seq_data[i:i + 12]) + ",\n")
        f.write("};\n")

        f.write("struct DecompEntry { uint32_t cp; uint16_t len; uint32_t offset; };\n")
        f.write("static const DecompEntry kDecomp[] = {\n")
        for cp, length, offset in decomp_entries:
            f.write("  {0x%X,%d,%d},\n" % (cp, length, offset))
        f.write("};\n")

        f.write("struct CccEntry { uint32_t cp; uint8_t ccc; };\n")
        f.write("static const CccEntry kCcc[] = {\n")
        for cp in sorted(ccc):
            f.write("  {0x%X,%d},\n" % (cp, ccc[cp]))
        f.write("};\n")

        f.write("struct CompEntry { uint32_t first; uint32_t second; uint32_t composed; };\n")
        f.write("static const CompEntry kComp[] = {\n")
        for (a, b) in sorted(pairs):
            f.write("  {0x%X,0x%X,0x%X},\n" % (a, b, pairs[(a, b)]))
        f.write("};\n")
        f.write("// clang-format on\n")

    sys.stderr.write("decomp=%d seq=%d ccc=%d pairs=%d\n"
                     % (len(decomp_entries), len(seq_data), len(ccc), len(pairs)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc")
