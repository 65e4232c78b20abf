"""Regenerates the CSV fixtures and experiment specs in this directory."""

import json

import numpy as np

rng = np.random.default_rng(20240601)


def write(name, headers, cols, dates=None):
    with open(name, "w", newline="") as f:
        f.write(",".join((["date"] if dates is not None else []) + headers) + "\n")
        for i in range(len(cols[0])):
            row = ([dates[i]] if dates is not None else []) + [repr(float(c[i])) for c in cols]
            f.write(",".join(row) + "\n")


def quarters(n, y0=1960):
    return [f"{y0 + i // 4}-Q{i % 4 + 1}" for i in range(n)]


def ar(t, k, rho):
    v = np.zeros((t, k))
    v[0] = rng.standard_normal(k) / np.sqrt(1 - rho**2)
    for s in range(1, t):
        v[s] = rho * v[s - 1] + rng.standard_normal(k)
    return v


def rounded(a):
    return np.round(a, 6)


# ones design with T = 4
write("tiny.csv", ["one", "y"], [np.ones(4), np.array([1.0, 3.0, 2.0, 5.0])])

# three regressors, feedback planted on x1
t = 80
e = rng.standard_normal(t + 1)
x = ar(t, 3, 0.5)
x[:, 0] += 0.8 * e[:-1]
y = 0.5 * x[:, 0] - 0.25 * x[:, 1] + e[1:]
write("k3.csv", ["x1", "x2", "x3", "y"], [rounded(c) for c in list(x.T) + [y]], quarters(t))

# one design per warning tier; the outcome is the last column
for name, k, rho in [("diag_green.csv", 10, 0.0), ("diag_amber.csv", 17, 0.8), ("diag_red.csv", 50, 0.8)]:
    x = ar(200, k, rho)
    y = rng.standard_normal(200)
    write(name, [f"x{j+1}" for j in range(k)] + ["y"], [rounded(c) for c in list(x.T) + [y]])

# persistent series with a common factor, for calibrated experiments
t, n = 160, 40
rhos = rng.uniform(0.3, 0.95, n)
common = ar(t, 1, 0.8)[:, 0]
panel = np.column_stack([ar(t, 1, r)[:, 0] + rng.uniform(0, 0.8) * common for r in rhos])
write("panel.csv", [f"s{j+1:02d}" for j in range(n)], [rounded(c) for c in panel.T], quarters(t))


def spec(name, **kw):
    body = {"process": "ar1", "alphas": [[1.5]], "sigma2": 1.0, "contrast": "feedback"}
    body.update(kw)
    with open(f"specs/{name}", "w") as f:
        json.dump(body, f, indent=2)
        f.write("\n")


spec("bias_by_k.json", T=200, K=list(range(4, 101, 4)), rho=0.8)
spec("bias_by_rho.json", T=200, K=50, rho=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98])
spec("bias_by_k_large_t.json", T=800, K=list(range(16, 401, 16)), rho=0.8)
spec("bias_by_k_ma1.json", T=200, K=list(range(4, 101, 4)), rho=0.8, process="ma1")
spec("smoke.json", T=60, K=[3, 6], rho=0.5)
