"""Build src/seqcoref/data/mini.conll from the bracket notation in mini_corpus.txt.

Kept free of any seqcoref imports so the fixture does not depend on the
package's own CoNLL writer.

    python scripts/make_mini_corpus.py
"""

import sys
from pathlib import Path

HERE = Path(__file__).parent
OUT = HERE.parent / "src" / "seqcoref" / "data" / "mini.conll"


def parse(text):
    docs = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("doc "):
            docs.append((line[4:].strip(), []))
            continue
        speaker, tokens = line.split(":", 1)
        docs[-1][1].append((speaker.strip(), tokens.split()))
    return docs


def rows(key, sentences):
    ids = {}
    out = [f"#begin document ({key}); part 000"]
    for speaker, tokens in sentences:
        words, cells, stack = [], [], []
        for tok in tokens:
            if tok.startswith("[") and len(tok) > 1:
                cid = ids.setdefault(tok[1:], len(ids))
                stack.append((cid, len(words)))
            elif tok == "]":
                cid, start = stack.pop()
                end = len(words) - 1
                if start == end:
                    cells[start].append(f"({cid})")
                else:
                    cells[start].append(f"({cid}")
                    cells[end].append(f"{cid})")
            else:
                words.append(tok)
                cells.append([])
        if stack:
            sys.exit(f"{key}: unclosed mention in {' '.join(tokens)}")
        for n, (word, cell) in enumerate(zip(words, cells)):
            opens = [c for c in cell if not c.endswith(")")]
            units = [c for c in cell if c.startswith("(") and c.endswith(")")]
            closes = [c for c in cell if not c.startswith("(")]
            coref = "|".join(opens + units + closes) or "-"
            cols = [key, "0", str(n), word, "-", "-", "-", "-", "-", speaker or "-", "*", coref]
            out.append("  ".join(cols))
        out.append("")
    out.append("#end document")
    return out


def main():
    docs = parse((HERE / "mini_corpus.txt").read_text(encoding="utf-8"))
    lines = []
    for key, sentences in docs:
        lines += rows(key, sentences)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(docs)} documents to {OUT}")


if __name__ == "__main__":
    main()
