"""Regenerates the frozen kernel values in test_transitions.py.

Independent of the package: for each (x, y) the pair (p_star, p) in omega+
solves the two equalizing equations (discount x with Player 1 at x, discount
y with Player 2 at y) in 500-digit arithmetic (the tiny points cancel heavily); omega- uses -s.
"""

import mpmath as mp

mp.mp.dps = 500
A = mp.mpf(1) / 16

S = {
    "zero": lambda x: mp.mpf(0),
    "sinlog": lambda x: A * mp.sin(mp.log(x)),
    "sinloglog": lambda x: A * mp.sin(mp.log(-mp.log(x))),
}


def side(x, y, s, sign):
    rows, rhs = [], []
    for lam in (x, y):
        sv = sign * s(lam)
        d = mp.sqrt(lam)
        fp, fm = sv + d, sv - d
        # lam (1 - f+) + (1 - lam) [p_star (1 - f+) + p (f- - f+)] = 0
        rows.append([(1 - lam) * (1 - fp), (1 - lam) * (fm - fp)])
        rhs.append(-lam * (1 - fp))
    sol = mp.lu_solve(mp.matrix(rows), mp.matrix(rhs))
    return sol[0], sol[1]


POINTS = [(mp.mpf(1) / 16, mp.mpf(1) / 64), (mp.mpf("1e-3"), mp.mpf("1e-5")),
          (mp.mpf("3e-8"), mp.mpf("0.05")), (mp.mpf("1e-200"), mp.mpf("1e-100"))]

if __name__ == "__main__":
    for name, s in S.items():
        for x, y in POINTS:
            ps, p = side(x, y, s, 1)
            qs, q = side(x, y, s, -1)
            print(f'    ("{name}", {mp.nstr(x, 17)}, {mp.nstr(y, 17)}, '
                  f'({mp.nstr(ps, 17)}, {mp.nstr(p, 17)}, {mp.nstr(qs, 17)}, {mp.nstr(q, 17)})),')
