"""Independent exact-arithmetic oracle for the cost-model goldens."""
import csv
import sys
from fractions import Fraction as F
from pathlib import Path

root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "data")


def dur(s):
    m, rest = s.split(":")
    sec, frac = rest.split(".")
    return int(m) * 60 + int(sec) + F(int(frac), 10 ** len(frac))


rows = list(csv.DictReader(open(root / "table1.csv")))


def col(fw):
    k = "circom" if fw == "circom" else "ezkl"
    size = "circom_constraints" if fw == "circom" else "ezkl_rows"
    return [(int(r[size]), dur(r[k + "_time"]), int(r[k + "_mem_kb"])) for r in rows]


def ols(pts):
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    b = sxy / sxx
    return b, my - b * mx


native = F(int(rows[-1]["tf_time_ns"]), 10 ** 9)
for fw in ("circom", "ezkl"):
    c = col(fw)
    full = c[-1]
    mx = max(m for _, _, m in c)
    for k, (s, t, m) in enumerate(c, 1):
        print(fw, k, float(F(s, full[0])), float((t + native) / (full[1] + native)), float(F(m, mx)))

c = col("ezkl")
tb, ta = ols([(F(s), t) for s, t, _ in c])
mb, ma = ols([(F(s), F(m)) for s, _, m in c])
print("time_fit", float(tb), float(ta))
print("mem_fit", float(mb), float(ma))
t2 = list(csv.DictReader(open(root / "table2.csv")))
given = [r for r in t2 if r["rows_given"] == "1"]
ratio = sum(F(int(r["rows"]), int(r["params"])) for r in given) / len(given)
for r in t2:
    rws = F(int(r["rows"])) if r["rows_given"] == "1" else int(r["params"]) * ratio
    print(r["name"], float(rws), float((tb * rws + ta) / 3600), float((mb * rws + ma) / 10 ** 9))
