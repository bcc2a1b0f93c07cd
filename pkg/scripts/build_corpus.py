#!/usr/bin/env python3
"""Regenerate the bundled corpus of input documents under corpus/.

Every document mirrors one of the worked examples exercised by the
acceptance suite, so that the command-line runs are one-liners.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from l2betti.algebras import (
    conditional_expectation, diagonal_subalgebra_vectors,
    distinct_triple_sign_cocycle, group_algebra, matrix_algebra,
    trivial_cocycle, trivial_extension,
)
from l2betti.fileio import (
    cocycle_to_doc, extension_to_doc, groupoid_to_doc, render_structured,
)
from l2betti.groupoids import (
    action_groupoid, group_groupoid, pair_relation, partition_relation,
    trivial_groupoid, uniform_space,
)
from l2betti.groups import cyclic_table, symmetric_table

OUT = os.path.join(os.path.dirname(__file__), "..", "corpus")


def write(name, doc):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        f.write(render_structured(doc))
    print("wrote", os.path.relpath(path))


def groupoids():
    write("trivial3.json", groupoid_to_doc(trivial_groupoid(uniform_space(3))))
    for n in (2, 3):
        write("pair%d.json" % n, groupoid_to_doc(pair_relation(uniform_space(n))))
    for name in ("C2", "C3"):
        table, unit, _ = cyclic_table(int(name[1]))
        write("group_%s.json" % name.lower(),
              groupoid_to_doc(group_groupoid(table, unit, name=name)))
    table, unit, _ = symmetric_table(3)
    write("group_s3.json", groupoid_to_doc(group_groupoid(table, unit, name="S3")))
    table, unit, _ = cyclic_table(2)
    x2 = uniform_space(2)
    action = {("g0", "x0"): "x0", ("g0", "x1"): "x1",
              ("g1", "x0"): "x1", ("g1", "x1"): "x0"}
    write("action_c2_swap.json",
          groupoid_to_doc(action_groupoid(table, unit, action, x2, name="C2swap")))
    field = {("g0", "x0"): "x0", ("g0", "x1"): "x1",
             ("g1", "x0"): "x0", ("g1", "x1"): "x1"}
    write("action_c2_field.json",
          groupoid_to_doc(action_groupoid(table, unit, field, x2, name="C2field")))
    write("partition_21.json",
          groupoid_to_doc(partition_relation(uniform_space(3),
                                             [["x0", "x1"], ["x2"]])))


def algebras():
    m2 = matrix_algebra(2)
    write("m2_diag.json", extension_to_doc(conditional_expectation(
        m2, diagonal_subalgebra_vectors(2), sub_labels=["d1", "d2"],
        name="M2/diag")))
    write("m2_scalars.json", extension_to_doc(trivial_extension(
        matrix_algebra(2), name="M2/C")))
    write("m3_scalars.json", extension_to_doc(trivial_extension(
        matrix_algebra(3), name="M3/C")))
    for n in (2, 3):
        table, unit, els = cyclic_table(n)
        write("cc%d.json" % n, extension_to_doc(trivial_extension(
            group_algebra(table, unit, elements=els, name="CC%d" % n))))
    table, unit, els = symmetric_table(3)
    write("cs3.json", extension_to_doc(trivial_extension(
        group_algebra(table, unit, elements=els, name="CS3"))))


def cocycles():
    r3 = pair_relation(uniform_space(3))
    write("cocycle_pair3_signs.json",
          cocycle_to_doc(distinct_triple_sign_cocycle(r3)))
    r2 = pair_relation(uniform_space(2))
    write("cocycle_pair2_trivial.json", cocycle_to_doc(trivial_cocycle(r2)))


def sums():
    write("sum_half_m2_half_cc2.json", {
        "kind": "weighted_sum",
        "name": "half M2/diag + half CC2/C",
        "mode": "componentwise",
        "summands": [
            {"weight": "1/2", "algebra": "m2_diag.json"},
            {"weight": "1/2", "algebra": "cc2.json"},
        ],
    })
    write("sum_central_cc2_cc3.json", {
        "kind": "weighted_sum",
        "name": "central half CC2 + half CC3",
        "mode": "central",
        "summands": [
            {"weight": "1/2", "algebra": "cc2.json"},
            {"weight": "1/2", "algebra": "cc3.json"},
        ],
    })


def instances():
    write("verify_compression_m2_scalars.json", {
        "kind": "verify_instance",
        "theorem": "compression",
        "algebra": "m2_scalars.json",
        "projection": [["e11", "1"]],
        "N": 2,
    })
    write("verify_compression_m2_diag.json", {
        "kind": "verify_instance",
        "theorem": "compression",
        "algebra": "m2_diag.json",
        "projection": [["e11", "1"]],
        "N": 2,
    })
    write("verify_directed_sum.json", {
        "kind": "verify_instance",
        "theorem": "directed_sum",
        "summands": [
            {"weight": "1/2", "algebra": "m2_diag.json"},
            {"weight": "1/2", "algebra": "cc2.json"},
        ],
        "N": 2,
    })
    write("verify_central_quadratic.json", {
        "kind": "verify_instance",
        "theorem": "central_quadratic",
        "summands": [
            {"weight": "1/2", "algebra": "cc2.json"},
            {"weight": "1/2", "algebra": "cc3.json"},
        ],
        "N": 2,
    })
    for gname in ("trivial3", "pair2", "pair3", "group_c2",
                  "action_c2_swap", "action_c2_field", "partition_21"):
        write("verify_equality_%s.json" % gname, {
            "kind": "verify_instance",
            "theorem": "groupoid_equality",
            "groupoid": "%s.json" % gname,
            "N": 4,
        })
    write("verify_residual_pair2.json", {
        "kind": "verify_instance",
        "theorem": "residual",
        "relation": "pair2.json",
        "N": 2,
    })
    write("verify_residual_pair3_twisted.json", {
        "kind": "verify_instance",
        "theorem": "residual",
        "relation": "pair3.json",
        "cocycle": "cocycle_pair3_signs.json",
        "N": 2,
    })


def main():
    os.makedirs(OUT, exist_ok=True)
    groupoids()
    algebras()
    cocycles()
    sums()
    instances()


if __name__ == "__main__":
    main()
