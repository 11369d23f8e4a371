#!/usr/bin/env python3
"""Write a ~1M-byte natural-English char-text corpus for the size-ratio demo.

Documents are docstrings harvested from the Python standard library, one per
line with whitespace collapsed. If too little text is found, the remainder is
filled with a seeded word-level Markov babble trained on what was found.
"""

import argparse
import ast
import random
import re
import sys
import sysconfig
from pathlib import Path


def docstrings(root: Path):
    for path in sorted(root.rglob("*.py")):
        if "test" in path.parts or "site-packages" in path.parts:
            continue
        try:
            tree = ast.parse(path.read_text(encoding="utf-8"))
        except (SyntaxError, UnicodeDecodeError, ValueError, OSError):
            continue
        for node in ast.walk(tree):
            if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
                doc = ast.get_docstring(node)
                if doc:
                    text = re.sub(r"\s+", " ", doc).strip()
                    if len(text) >= 40 and text.isascii():
                        yield text


def babble(seed_docs, n_bytes, seed):
    rng = random.Random(seed)
    words = " ".join(seed_docs).split() or ["the", "index", "of", "a", "corpus"]
    follow = {}
    for a, b in zip(words, words[1:]):
        follow.setdefault(a, []).append(b)
    out, size = [], 0
    while size < n_bytes:
        w = rng.choice(words)
        line = [w]
        for _ in range(rng.randint(10, 60)):
            w = rng.choice(follow.get(w, words))
            line.append(w)
        text = " ".join(line)
        out.append(text)
        size += len(text) + 1
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--bytes", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    root = Path(sysconfig.get_paths()["stdlib"])
    docs, size, seen = [], 0, set()
    for d in docstrings(root):
        if d in seen:
            continue
        seen.add(d)
        docs.append(d)
        size += len(d) + 1
        if size >= args.bytes:
            break
    if size < args.bytes:
        print(f"only {size} bytes of docstrings; filling with seeded babble", file=sys.stderr)
        docs += babble(docs, args.bytes - size, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(docs) + "\n", encoding="ascii")
    print(f"wrote {len(docs)} documents to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
