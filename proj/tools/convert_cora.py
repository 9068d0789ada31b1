#!/usr/bin/env python3
"""Convert the LINQS Cora distribution (cora.content / cora.cites) into the
canonical dataset directory layout (edges.csv, features.csv, labels.csv).

Nodes are numbered by their order of appearance in cora.content; class
names map to integer labels in sorted order. Duplicate citation pairs and
self-citations are dropped by the loader anyway, but the converter also
canonicalizes them so the emitted files are minimal.
"""

import argparse
import os


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("content", help="path to cora.content")
    parser.add_argument("cites", help="path to cora.cites")
    parser.add_argument("out", help="output dataset directory")
    args = parser.parse_args()

    ids, features, class_names = [], [], []
    with open(args.content, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            ids.append(parts[0])
            features.append(parts[1:-1])
            class_names.append(parts[-1])

    index = {paper: i for i, paper in enumerate(ids)}
    classes = sorted(set(class_names))
    class_id = {name: i for i, name in enumerate(classes)}

    edges = set()
    with open(args.cites, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            u, v = index[parts[0]], index[parts[1]]
            if u == v:
                continue
            edges.add((min(u, v), max(u, v)))

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "edges.csv"), "w", encoding="utf-8") as fh:
        for u, v in sorted(edges):
            fh.write(f"{u},{v}\n")
    with open(os.path.join(args.out, "features.csv"), "w", encoding="utf-8") as fh:
        for row in features:
            fh.write(",".join(row) + "\n")
    with open(os.path.join(args.out, "labels.csv"), "w", encoding="utf-8") as fh:
        fh.write(f"#classes={len(classes)}\n")
        for name in class_names:
            fh.write(f"{class_id[name]}\n")

    print(f"nodes={len(ids)} features={len(features[0])} "
          f"classes={len(classes)} edges={len(edges)}")


if __name__ == "__main__":
    main()
