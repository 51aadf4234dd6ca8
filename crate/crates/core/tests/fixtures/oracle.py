#!/usr/bin/env python3
"""Dense brute-force scorer for the fixture dataset.

Independent of the Rust implementation: dense matrices, exact fractions
for raw values, 50-digit mpmath for similarities and predictions.
Writes golden_leaderboard.csv and golden_alice.txt next to this script.

    python3 oracle.py fixture.jsonl
"""
import json
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

mpmath.mp.dps = 50
K = 5
HI = 10

SINGLE = [
    "issue_opened", "issue_commented", "issue_closed", "issue_closed_with_pr",
    "issue_assigned", "commit_commented", "commit_authored", "commit_committed",
    "pr_opened", "pr_merged", "pr_assigned", "pr_commented",
]
SUMS = {
    "count": SINGLE,
    "contribution": ["pr_opened", "issue_opened", "issue_closed_with_pr", "pr_merged", "commit_committed"],
    "comment": ["issue_commented", "commit_commented", "pr_commented"],
    "issue_related": ["issue_opened", "issue_closed_with_pr", "issue_commented", "issue_assigned"],
    "pr_related": ["pr_opened", "pr_merged", "pr_closed", "pr_assigned"],
    "commit_related": ["commit_commented", "commit_authored", "commit_committed"],
}
RATIOS = {
    "commit2comment": ("commit_committed", "commit_commented"),
    "issue2comment": ("issue_opened", "issue_commented"),
    "pr2comment": ("pr_opened", "pr_commented"),
    "code2comment": ("contribution", "comment"),
}


def load(path):
    counts = {}
    devs, projs = {}, {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        d = r["developer"]
        p = (r["owner"], r["repo"])
        dk = d.lower()
        pk = (p[0] + "/" + p[1]).lower()
        devs[dk] = min(devs.get(dk, d), d)
        projs[pk] = min(projs.get(pk, p), p)
        key = (dk, pk, r["kind"])
        counts[key] = counts.get(key, 0) + int(r.get("count", 1))
    return counts, sorted(devs), sorted(projs), projs


def dense(counts, devs, projs, fn):
    return [[fn(d, p) for p in projs] for d in devs]


def raw_matrix(name, counts, devs, projs):
    c = lambda d, p, k: counts.get((d, p, k), 0)
    if name in SINGLE:
        return dense(counts, devs, projs, lambda d, p: Fraction(c(d, p, name)))
    if name in SUMS:
        return dense(counts, devs, projs, lambda d, p: Fraction(sum(c(d, p, k) for k in SUMS[name])))
    if name in RATIOS:
        num, den = RATIOS[name]
        a = raw_matrix(num, counts, devs, projs)
        b = raw_matrix(den, counts, devs, projs)
        return [[a[i][j] / b[i][j] if b[i][j] != 0 else Fraction(0)
                 for j in range(len(projs))] for i in range(len(devs))]
    if name.startswith("binary_"):
        base = name[len("binary_"):]
        return dense(counts, devs, projs,
                     lambda d, p: Fraction(sum(1 for k in SUMS[base] if c(d, p, k) > 0)))
    if name == "sun_baseline":
        return dense(counts, devs, projs,
                     lambda d, p: Fraction(c(d, p, "star") + c(d, p, "watch") + c(d, p, "create")))
    raise KeyError(name)


def ratings_of(raw):
    mx = max(v for row in raw for v in row)
    if mx == 0:
        return None
    out = []
    for row in raw:
        out.append([mpmath.mpf(HI) * mpmath.mpf((v / mx).numerator) / (v / mx).denominator for v in row])
    return out


def cosine(R, a, b):
    col_a = [row[a] for row in R]
    col_b = [row[b] for row in R]
    na = sum(x * x for x in col_a)
    nb = sum(x * x for x in col_b)
    if na == 0 or nb == 0:
        return mpmath.mpf(0)
    return sum(x * y for x, y in zip(col_a, col_b)) / mpmath.sqrt(na * nb)


def recommend(R, i, projs, display, k):
    if R is None:
        return []
    P = len(projs)
    known = [j for j in range(P) if R[i][j] > 0]
    cands = []
    for u in range(P):
        if R[i][u] > 0:
            continue
        s = sum(R[i][j] * cosine(R, j, u) for j in known) if known else mpmath.mpf(0)
        if s > 0:
            cands.append((s, projs[u]))
    # Exact ties (equal to ~40 digits) break by ascending full name; distinct
    # scores must be far apart so that double precision resolves them alike.
    cands.sort(key=lambda t: -t[0])
    groups = []
    for s, p in cands:
        if groups and abs(groups[-1][0][0] - s) <= mpmath.mpf("1e-40") * abs(s):
            groups[-1].append((s, p))
        else:
            groups.append([(s, p)])
    for g1, g2 in zip(groups, groups[1:]):
        if abs(g1[0][0] - g2[0][0]) <= mpmath.mpf("1e-9") * abs(g1[0][0]):
            raise SystemExit(f"near-tie {g1[0][0]} vs {g2[0][0]}: fixture not resolvable in f64")
    cands = [t for g in groups for t in sorted(g, key=lambda t: t[1])]
    return cands[:k]


def hit(recs, watched, n):
    if not watched:
        return None
    watched_owners = {w.split("/")[0] for w in watched}
    full = sum(1 for _, p in recs if p in watched)
    owner = sum(1 for _, p in recs if p not in watched and p.split("/")[0] in watched_owners)
    den = n if len(watched) >= n else len(watched)
    score = Fraction(100) * (Fraction(full) + Fraction(owner, 2)) / den
    return min(score, Fraction(100)), full, owner


def main():
    counts, devs, projs, display = load(sys.argv[1])
    watched = {d: {p for (dd, p, kk), v in counts.items() if dd == d and kk == "watch" and v > 0} for d in devs}
    specs = ([(s, "single") for s in SINGLE]
             + [(s, "fusion_sum") for s in SUMS]
             + [(s, "fusion_ratio") for s in RATIOS]
             + [("binary_" + s, "binary_fusion") for s in SUMS]
             + [("sun_baseline", "baseline")])
    rows = []
    for name, family in specs:
        R = ratings_of(raw_matrix(name, counts, devs, projs))
        scores = []
        for i, d in enumerate(devs):
            h = hit(recommend(R, i, projs, display, K), watched[d], K)
            if h is not None:
                scores.append(float(h[0]))
        # Same reduction order as a left fold over developers sorted by login.
        mean = None
        if scores:
            acc = 0.0
            for s in scores:
                acc += s
            mean = acc / len(scores)
        rows.append((name, family, mean, len(scores)))
    for s in RATIOS:
        rows.append(("binary_" + s, "binary_fusion", "x", 0))

    def order(r):
        if r[2] == "x":
            return (2, 0.0, r[0])
        if r[2] is None:
            return (1, 0.0, r[0])
        return (0, -r[2], r[0])

    rows.sort(key=order)
    out = Path(sys.argv[0]).resolve().parent
    with open(out / "golden_leaderboard.csv", "w") as f:
        f.write("metric,family,hit_score,developers_evaluated\n")
        for name, family, mean, n in rows:
            shown = "x" if mean == "x" else ("n/a" if mean is None else "%.1f" % mean)
            f.write(f"{name},{family},{shown},{n}\n")

    R = ratings_of(raw_matrix("comment", counts, devs, projs))
    a = devs.index("alice")
    recs = recommend(R, a, projs, display, K)
    with open(out / "golden_alice.txt", "w") as f:
        for s, p in recs:
            f.write(f"{p} {mpmath.nstr(s, 15)}\n")
        f.write("hit %s full=%d owner=%d\n" % tuple([float(x) if i == 0 else x
                                                      for i, x in enumerate(hit(recs, watched["alice"], K))]))


if __name__ == "__main__":
    main()
