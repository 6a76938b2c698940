import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from compana.coding import Name, dyadic_name, name_to_real, pairing, seq_project, seq_tupling
from compana.constructions import kleene_tree, specker_seq
from compana.corpora import exclusion_corpus, plf_corpus
from compana.exact import CReal, Dyadic
from compana.functions import PLFunc
from compana.machines import StagePair, StageSet
from compana.reductions import max_equiv_zero_witnesses
from compana.weihrauch import (
    DomainStatus,
    Problem,
    ReductionWitness,
    Verdict,
    bwt_problem,
    cn_problem,
    cn_solve,
    cn_trace,
    combine,
    decode_cfunc,
    encode_cfunc,
    encode_monotone,
    encode_real_seq,
    encode_tree,
    identity_problem,
    identity_witness,
    jump,
    lim_problem,
    max_problem,
    mct_problem,
    parallelize,
    reduce_check,
    wkl_problem,
    zero_problem,
)


def stream(values):
    return Name.from_list(values)


def excluding(*ns):
    return stream([n + 1 for n in ns])


# -- harness --------------------------------------------------------------------


def test_combine_product_semantics():
    A, R, U = Verdict.ACCEPTED, Verdict.REJECTED, Verdict.UNKNOWN
    assert combine([A, A]) is A and combine([A, U]) is U and combine([U, R, A]) is R
    assert combine([]) is A


def test_identity_reflexivity():
    rng = random.Random(1)
    names = [Name.from_list([rng.randrange(50) for _ in range(40)]) for _ in range(8)]
    report = reduce_check(identity_problem(), identity_problem(), identity_witness(), names, 30, 0)
    assert report.all_accepted and report.count(Verdict.ACCEPTED) == 8


def test_identity_witness_on_zero_problem():
    z = zero_problem()
    instances = [encode_cfunc(f) for f in plf_corpus(0, 6)]
    report = reduce_check(z, z, identity_witness(), instances, 20, 40)
    assert report.all_accepted


def test_negative_control_is_rejected():
    z, m = zero_problem(), max_problem()
    z_le_max, _ = max_equiv_zero_witnesses()
    broken = ReductionWitness(z_le_max.k_pre, lambda x, y: dyadic_name(Dyadic(0)), label="broken")
    f = PLFunc([(0, -1), (1, 1)])  # zero at 1/2, not at 0
    report = reduce_check(z, m, broken, [encode_cfunc(f)], 20, 1000)
    assert report.count(Verdict.REJECTED) == 1


def test_domain_violations_are_skipped():
    z = zero_problem()
    positive = encode_cfunc(PLFunc([(0, 1), (1, 2)]))
    report = reduce_check(z, z, identity_witness(), [positive], 10, 20)
    assert report.skipped == 1 and report.outcomes[0].diagnostic
    assert not report.all_accepted


def test_witness_errors_count_as_rejections():
    from compana.errors import CompanaError

    def boom(x):
        raise CompanaError("no")

    w = ReductionWitness(boom, lambda x, y: y)
    report = reduce_check(identity_problem(), identity_problem(), w, [Name.constant(1)], 5, 0)
    assert report.count(Verdict.REJECTED) == 1


def test_transitivity_by_composition():
    z, m = zero_problem(), max_problem()
    z_le_max, max_le_z = max_equiv_zero_witnesses()
    instances = [encode_cfunc(f) for f in plf_corpus(3, 6)]
    # Z <= MAX <= Z and MAX <= Z <= MAX
    for source, wa, wb in ((z, z_le_max, max_le_z), (m, max_le_z, z_le_max)):
        assert reduce_check(source, source, wa.compose(wb), instances, 20, 1000).all_accepted
    chained = identity_witness().compose(z_le_max).compose(identity_witness())
    assert reduce_check(z, m, chained, instances, 20, 1000).all_accepted


def test_concurrent_harness_matches_serial():
    z, m = zero_problem(), max_problem()
    w, _ = max_equiv_zero_witnesses()
    instances = [encode_cfunc(f) for f in plf_corpus(2, 8)]
    serial = reduce_check(z, m, w, instances, 16, 500)
    threaded = reduce_check(z, m, w, instances, 16, 500, workers=4)
    assert serial == threaded


def test_cfunc_coding_round_trip():
    f = PLFunc([(0, -1), (Fraction(1, 3), 2), (1, 0)])
    g = decode_cfunc(encode_cfunc(f))
    assert g.modulus(7) == f.modulus(7)
    for k in range(9):
        x = Dyadic(k, -3)
        assert g.at(x, 12) == f.at(x, 12)


# -- choice on N ----------------------------------------------------------------


def test_cn_solve_examples():
    assert cn_solve(excluding(0, 1, 2), 100) == (3, 3)
    assert cn_solve(stream([]), 100) == (0, 0)
    evens = excluding(*range(0, 100, 2))
    answer, changes = cn_solve(evens, 200)
    assert answer == 1 and changes == 1


@given(st.integers(0, 2**32))
def test_cn_mind_change_bounds(seed):
    stream_values = exclusion_corpus(seed, 4)[-1]
    p = stream(stream_values)
    answer, changes = cn_solve(p, len(stream_values) + 5)
    excluded = {v - 1 for v in stream_values if v}
    assert answer not in excluded and all(n in excluded for n in range(answer))
    assert changes <= len({n for n in excluded if n < answer})
    trace = cn_trace(p, len(stream_values) + 5)
    last_relevant = max((t + 1 for t, v in enumerate(stream_values) if v and v - 1 < answer), default=0)
    assert all(a == answer for a in trace[last_relevant:])


def test_cn_problem_verifier():
    c = cn_problem()
    p = excluding(0, 2)
    assert c.verifier(p, Name.constant(1), 0) is Verdict.ACCEPTED
    assert c.verifier(p, Name.constant(2), 0) is Verdict.REJECTED


# -- combinators ----------------------------------------------------------------


def test_parallelize_identity():
    par = parallelize(identity_problem())
    rng = random.Random(4)
    rows = [[rng.randrange(9) for _ in range(30)] for _ in range(6)]
    inst = seq_tupling([stream(r) for r in rows] + [stream([])] * 20)
    out = par.oracle(inst, 0)
    for k in range(6):
        assert seq_project(out, k).prefix(30) == rows[k]
    assert par.verifier(inst, out, 5) is Verdict.ACCEPTED


def test_parallelize_cn():
    streams = [excluding(0, 1), excluding(), excluding(*range(0, 40, 2))]
    par = parallelize(cn_problem(), components=3)
    inst = seq_tupling(streams)
    out = par.oracle(inst, 200)
    assert [seq_project(out, k).at(0) for k in range(3)] == [2, 0, 1]
    assert par.verifier(inst, out, 10) is Verdict.ACCEPTED
    # product semantics: one wrong component rejects the whole
    bad = seq_tupling([Name.constant(2), Name.constant(0), Name.constant(0)])
    assert par.verifier(inst, bad, 10) is Verdict.REJECTED


def test_jump_on_constant_sequences():
    c = cn_problem()
    j = jump(c)
    for values in exclusion_corpus(9, 5):
        base = stream(values)
        constant_seq = seq_tupling(lambda k, base=base: base)
        for stage in (0, 3, 40):
            assert j.oracle(constant_seq, stage).at(0) == c.oracle(base, stage).at(0)
        assert j.verifier(constant_seq, c.oracle(base, 100), 4) is c.verifier(base, c.oracle(base, 100), 4)


def test_jump_settling_sequence():
    settled = excluding(0, 1)
    seq = seq_tupling(lambda k: settled if k >= 5 else excluding(3))
    j = jump(cn_problem())
    assert all(j.oracle(seq, s).at(0) == 2 for s in range(5, 50))
    assert j.oracle(seq, 2).at(0) == 0


def test_jump_identity_stabilizes():
    target = [3, 1, 4, 1, 5, 9, 2, 6]

    def approx(k):
        return stream([v if i < k else 0 for i, v in enumerate(target)])

    seq = seq_tupling(approx)
    j = jump(identity_problem())
    assert j.oracle(seq, 8).prefix(8) == target
    assert j.verifier(seq, stream(target), 7) is Verdict.ACCEPTED


def test_lim_problem():
    lim = lim_problem(horizon=32)
    seq = seq_tupling(lambda k: stream([7, 7, 1 if k < 10 else 2]))
    assert lim.oracle(seq, 40).prefix(3) == [7, 7, 2]
    assert lim.verifier(seq, stream([7, 7, 2]), 2) is Verdict.ACCEPTED
    assert lim.verifier(seq, stream([7, 7, 1]), 2) is Verdict.REJECTED


# -- registered problems --------------------------------------------------------


def test_wkl_examples():
    w = wkl_problem()
    full = encode_tree(kleene_tree(StagePair(StageSet.empty(), StageSet.empty())))
    assert w.oracle(full, 20).prefix(20) == [0] * 20
    pair = StagePair(StageSet.injected({0: 1}), StageSet.injected({2: 1}))
    tree = encode_tree(kleene_tree(pair))
    path = w.oracle(tree, 16)
    assert path.at(0) == 1 and path.at(2) == 0
    assert w.verifier(tree, path, 16) is Verdict.ACCEPTED
    assert w.verifier(tree, Name.constant(0), 4) is Verdict.REJECTED
    assert w.domain_check(tree, 12) is DomainStatus.OK


def test_wkl_finite_tree_violates_domain():
    from compana.constructions import TreePredicate

    finite = TreePredicate(lambda word: len(word) <= 3)
    assert wkl_problem().domain_check(encode_tree(finite), 6) is DomainStatus.VIOLATED


def test_mct_examples():
    m = mct_problem()
    specker = encode_monotone(specker_seq(StageSet.injected({1: 2, 3: 5})))
    z = m.oracle(specker, 10)
    assert abs(name_to_real(z).approx(20) - Dyadic(5, -3)) <= Dyadic(1, -20)
    assert m.verifier(specker, z, 20) is Verdict.ACCEPTED
    assert m.verifier(specker, dyadic_name(Dyadic(1, -1)), 10) is Verdict.REJECTED
    assert m.domain_check(specker, 10) is DomainStatus.OK


def test_bwt_problem():
    b = bwt_problem()
    seq = encode_real_seq(specker_seq(StageSet.injected({1: 2, 3: 5})).terms)
    z = b.oracle(seq, 1000)
    assert b.verifier(seq, z, 10) is Verdict.ACCEPTED
    assert b.verifier(seq, dyadic_name(Dyadic(3)), 10) is Verdict.REJECTED
    # a point that is not a cluster point cannot be refuted finitely
    assert b.verifier(seq, dyadic_name(Dyadic(0)), 10) is Verdict.UNKNOWN


def test_zero_and_max_verifiers():
    z, m = zero_problem(), max_problem()
    tent = encode_cfunc(PLFunc([(0, 0), (Fraction(1, 2), 1), (1, 0)]))
    line = encode_cfunc(PLFunc([(0, -1), (1, 1)]))
    half = dyadic_name(Dyadic(1, -1))
    assert z.verifier(line, half, 20) is Verdict.ACCEPTED
    assert z.verifier(line, dyadic_name(Dyadic(1, -2)), 20) is Verdict.REJECTED
    assert m.verifier(tent, half, 20) is Verdict.ACCEPTED
    assert m.verifier(tent, dyadic_name(Dyadic(0)), 20) is Verdict.REJECTED
    assert z.verifier(line, dyadic_name(Dyadic(3)), 20) is Verdict.REJECTED


def test_oracles_are_deterministic():
    z = zero_problem()
    inst = encode_cfunc(plf_corpus(0, 6)[5])
    assert z.oracle(inst, 30).prefix(5) == z.oracle(inst, 30).prefix(5)
