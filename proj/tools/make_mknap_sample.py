#!/usr/bin/env python3
"""Writes a synthetic multi-knapsack file in OR-Library layout.

Follows the usual correlated recipe: weights uniform on 1..1000, capacity a
fixed fraction of the row sum, profit = mean column weight + 500 * U(0,1)
rounded down. The stated optimum is written as 0 (unknown).
"""
import argparse
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-n", type=int, default=500)
    ap.add_argument("-m", type=int, default=5)
    ap.add_argument("--tightness", type=float, default=0.25)
    ap.add_argument("--problems", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    lines = [str(args.problems)]
    for _ in range(args.problems):
        w = [[rng.randint(1, 1000) for _ in range(args.n)] for _ in range(args.m)]
        p = [sum(w[i][j] for i in range(args.m)) // args.m + int(500 * rng.random())
             for j in range(args.n)]
        c = [int(args.tightness * sum(row)) for row in w]
        lines.append(f"{args.n} {args.m} 0")
        lines.append(" ".join(map(str, p)))
        lines.extend(" ".join(map(str, row)) for row in w)
        lines.append(" ".join(map(str, c)))
    with open(args.output, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
