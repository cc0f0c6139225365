#!/usr/bin/env python3
"""Regenerates the JSON model fixtures in this directory.

Each structural table is built from a Python function of (parent values,
noise symbol). Run from anywhere: `python3 fixtures/generate.py`.
"""
import itertools
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
BIN = [0, 1]


def var(name, role, support, parents, noise, probs, fn, supports):
    rows = []
    for combo in itertools.product(*[supports[p] for p in parents]):
        for n in noise:
            value = fn(dict(zip(parents, combo)), n)
            assert value in support, (name, combo, n, value)
            rows.append({"parents": list(combo), "noise": n, "value": value})
    supports[name] = support
    return {
        "name": name,
        "role": role,
        "support": support,
        "parents": parents,
        "noise": {"symbols": noise, "probs": probs},
        "table": rows,
    }


def uniform(k):
    return [1.0 / k] * k


def write(name, description, variables):
    doc = {"name": name, "description": description, "variables": variables}
    with open(os.path.join(HERE, name + ".json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


# Eight students: (M(0), M(1), Y(0), Y(1, M(0)), Y(1), observed A).
STUDENTS = {
    "Bo": ("low", "high", 4, 7, 9, 1),
    "Sam": ("medium", "high", 7, 7, 8, 1),
    "Ian": ("low", "low", 5, 7, 7, 1),
    "Ben": ("low", "medium", 8, 6, 7, 1),
    "Suri": ("low", "high", 3, 3, 5, 0),
    "Bill": ("low", "medium", 6, 5, 7, 0),
    "Kat": ("high", "high", 9, 8, 8, 0),
    "Dre": ("medium", "high", 4, 7, 8, 0),
}
NAMES = list(STUDENTS)
PREP = ["low", "medium", "high"]
SCORES = list(range(3, 10))


def student_outcome(s, a, m):
    """Y(a, m) for a student; unpinned cells take the nearest pinned value
    (by support position) for the same exposure, ties to the M(0) value."""
    m0, m1, y0, y1m0, y1, _ = STUDENTS[s]
    if a == 0:
        return y0
    if m == m1 and m != m0:
        return y1
    if m == m0:
        return y1m0
    d0 = abs(PREP.index(m) - PREP.index(m0))
    d1 = abs(PREP.index(m) - PREP.index(m1))
    return y1m0 if d0 <= d1 else y1


def collegeprep8():
    sup = {}
    vs = [
        var("U", "latent", NAMES, [], NAMES, uniform(8), lambda p, n: n, sup),
        var("A", "exposure", BIN, ["U"], ["u"], [1.0], lambda p, n: STUDENTS[p["U"]][5], sup),
        var("M", "mediator", PREP, ["A", "U"], ["u"], [1.0],
            lambda p, n: STUDENTS[p["U"]][p["A"]], sup),
        var("Y", "outcome", SCORES, ["A", "M", "U"], ["u"], [1.0],
            lambda p, n: student_outcome(p["U"], p["A"], p["M"]), sup),
    ]
    write(
        "collegeprep8",
        "Eight-student college-prep example. U indexes the student and drives "
        "the observed exposure, so A is confounded. Y(0, m) = Y(0) for every m; "
        "Y(1, m) at unpinned m takes the nearest pinned value for the same "
        "student and exposure (ties go to the M(0) value).",
        vs,
    )


def collegeprep8_unconfounded():
    sup = {}
    vs = [
        var("A", "exposure", BIN, [], ["a0", "a1"], uniform(2), lambda p, n: int(n[1]), sup),
        var("M", "mediator", PREP, ["A"], NAMES, uniform(8),
            lambda p, n: STUDENTS[n][p["A"]], sup),
        var("Y", "outcome", SCORES, ["A", "M"], NAMES, uniform(8),
            lambda p, n: student_outcome(n, p["A"], p["M"]), sup),
    ]
    write(
        "collegeprep8_unconfounded",
        "Unconfounded variant of the college-prep example: A is a fair coin, "
        "and M and Y draw independent student profiles as their noise.",
        vs,
    )


def nullmodel():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.6, 0.4], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["lo", "hi"], [0.5, 0.5],
            lambda p, n: p["C"] if n == "lo" else 1 - p["C"], sup),
        var("M", "mediator", [0, 1, 2], ["A", "C"], ["e0", "e1"], [0.3, 0.7],
            lambda p, n: p["A"] + (1 if n == "e1" else 0), sup),
        var("Y", "outcome", [0, 1, 2, 3], ["A", "M", "C"], ["e0", "e1", "e2"], [0.2, 0.5, 0.3],
            lambda p, n: p["C"] + int(n[1]), sup),
    ]
    write("nullmodel", "Y's table ignores A and M: every effect is zero.", vs)


def l_model():
    sup = {}
    vs = [
        var("A", "exposure", BIN, [], ["a0", "a1"], uniform(2), lambda p, n: int(n[1]), sup),
        var("L", "intermediate_confounder", BIN, ["A"], ["l0", "l1"], uniform(2),
            lambda p, n: p["A"] * int(n[1]), sup),
        var("M", "mediator", BIN, ["A", "L"], ["u"], [1.0], lambda p, n: p["A"] * p["L"], sup),
        var("Y", "outcome", [0, 1, 2], ["A", "L", "M"], ["u"], [1.0],
            lambda p, n: p["M"] * p["L"] + p["A"], sup),
    ]
    write(
        "l_model",
        "Intermediate confounder L = A * noise feeds both M = A * L and "
        "Y = M * L + A. NIE(1.) = 1/2 but IIE(1.) = 1/4.",
        vs,
    )


def bullying():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.55, 0.45], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["n0", "n1", "n2", "n3"], [0.25, 0.25, 0.25, 0.25],
            lambda p, n: 1 if int(n[1]) < 1 + 2 * p["C"] else 0, sup),
        var("M", "mediator", BIN, ["A", "C"], ["n0", "n1", "n2", "n3", "n4"], uniform(5),
            lambda p, n: 1 if int(n[1]) < 1 + 2 * p["A"] + p["C"] else 0, sup),
        var("Y", "outcome", [0, 1, 2, 3, 4], ["A", "M", "C"], ["n0", "n1"], [0.6, 0.4],
            lambda p, n: p["A"] + 2 * p["M"] + p["C"] * int(n[1]), sup),
    ]
    write(
        "bullying",
        "Disparity example: C is a binary background trait, A the group, "
        "M whether the child was bullied, Y a distress score.",
        vs,
    )


def fig3():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["n0", "n1", "n2"], uniform(3),
            lambda p, n: 1 if int(n[1]) <= p["C"] else 0, sup),
        var("M", "mediator", [0, 1, 2], ["A", "C"], ["n0", "n1"], [0.4, 0.6],
            lambda p, n: min(2, p["A"] + p["C"] * int(n[1]) + int(n[1]) * (1 - p["A"])), sup),
        var("Y", "outcome", [0, 1, 2, 3, 4], ["A", "M", "C"], ["n0", "n1"], [0.5, 0.5],
            lambda p, n: min(4, p["A"] * p["M"] + p["C"] + int(n[1]) + (p["M"] == 2)), sup),
    ]
    write("fig3", "Covariate C confounds A, M and Y; no intermediate confounder.", vs)


def fig4():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["n0", "n1", "n2"], uniform(3),
            lambda p, n: 1 if int(n[1]) <= p["C"] else 0, sup),
        var("L", "intermediate_confounder", BIN, ["A", "C"], ["n0", "n1", "n2", "n3"], uniform(4),
            lambda p, n: 1 if int(n[1]) < 1 + p["A"] + p["C"] else 0, sup),
        var("M", "mediator", BIN, ["A", "L", "C"], ["n0", "n1", "n2", "n3", "n4"], uniform(5),
            lambda p, n: 1 if int(n[1]) < 1 + p["A"] + p["L"] * (1 + p["C"]) else 0, sup),
        var("Y", "outcome", [0, 1, 2, 3, 4, 5], ["A", "L", "M", "C"], ["n0", "n1"], [0.5, 0.5],
            lambda p, n: p["A"] + 2 * p["M"] * p["L"] + p["C"] + int(n[1]), sup),
    ]
    write(
        "fig4",
        "Exposure-induced confounder L of the mediator-outcome relation, "
        "alongside a baseline covariate C. Every cell of the observed law has "
        "positive mass.",
        vs,
    )


def latent_my():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("U", "latent", BIN, [], ["u0", "u1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["n0", "n1"], [0.5, 0.5],
            lambda p, n: p["C"] if n == "n0" else 1 - p["C"], sup),
        var("M", "mediator", BIN, ["A", "U"], ["n0", "n1"], [0.5, 0.5],
            lambda p, n: max(p["A"] * int(n[1]), p["U"]), sup),
        var("Y", "outcome", [0, 1, 2, 3, 4], ["A", "M", "C", "U"], ["u"], [1.0],
            lambda p, n: p["A"] + p["M"] + p["C"] + p["U"], sup),
    ]
    write("latent_my", "Latent U confounds the mediator-outcome relation.", vs)


def linear_nointeraction():
    sup = {}
    vs = [
        var("C", "covariate", BIN, [], ["c0", "c1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("A", "exposure", BIN, ["C"], ["n0", "n1", "n2", "n3", "n4"], uniform(5),
            lambda p, n: 1 if int(n[1]) < 2 + p["C"] else 0, sup),
        var("M", "mediator", [0, 1, 2, 3], ["A", "C"], ["e0", "e1"], [0.5, 0.5],
            lambda p, n: p["A"] + p["C"] + int(n[1]), sup),
        var("Y", "outcome", list(range(1, 16)), ["A", "M", "C"], ["e0", "e1", "e2"], uniform(3),
            lambda p, n: 1 + 2 * p["A"] + 3 * p["M"] + p["C"] + int(n[1]), sup),
    ]
    write(
        "linear_nointeraction",
        "Linear, interaction-free model: M = A + C + e, Y = 1 + 2A + 3M + C + e. "
        "NIE(1.) = 3.",
        vs,
    )


def interaction():
    sup = {}
    # M(0) takes 0, 0, 1, 2 and M(1) takes 0, 1, 2, 2 over the noise, so both
    # exposure arms cover every mediator level.
    vs = [
        var("A", "exposure", BIN, [], ["a0", "a1"], [0.5, 0.5], lambda p, n: int(n[1]), sup),
        var("M", "mediator", [0, 1, 2], ["A"], ["e0", "e1", "e2", "e3"], uniform(4),
            lambda p, n: int(int(n[1]) >= 2 - p["A"]) + int(int(n[1]) >= 3 - p["A"]), sup),
        var("Y", "outcome", [0, 1, 5, 6, 10, 11], ["A", "M"], ["e0", "e1"], [0.5, 0.5],
            lambda p, n: 5 * p["A"] * p["M"] + int(n[1]), sup),
    ]
    write(
        "interaction",
        "Exposure-mediator interaction: E[M(1)] - E[M(0)] = 1/2, Y = 5AM + e. "
        "NIE(1.) = 5/2.",
        vs,
    )


def m_ignores_a():
    sup = {}
    vs = [
        var("A", "exposure", BIN, [], ["a0", "a1"], [0.4, 0.6], lambda p, n: int(n[1]), sup),
        var("M", "mediator", BIN, ["A"], ["e0", "e1"], [0.3, 0.7], lambda p, n: int(n[1]), sup),
        var("Y", "outcome", [0, 1, 2, 3], ["A", "M"], ["u"], [1.0],
            lambda p, n: p["A"] + 2 * p["M"], sup),
    ]
    write("m_ignores_a", "M's table ignores A: indirect effects vanish.", vs)


if __name__ == "__main__":
    collegeprep8()
    collegeprep8_unconfounded()
    nullmodel()
    l_model()
    bullying()
    fig3()
    fig4()
    latent_my()
    linear_nointeraction()
    interaction()
    m_ignores_a()
