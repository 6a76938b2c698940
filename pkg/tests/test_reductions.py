from fractions import Fraction

import pytest

from compana.coding import Name, dyadic_name, name_to_real, seq_project, seq_tupling
from compana.constructions import specker_seq
from compana.exact import CReal, Dyadic, MonotoneSeq
from compana.functions import EllTwoVec, PLFunc, dense_unit_ball, functional_from_vec
from compana.machines import StageSet
from compana.reductions import (
    WITNESSES,
    DiagonalOperator,
    bim_exclusions,
    bim_via_cn,
    digit_readout,
    ec_problem,
    ec_via_frr_witness,
    enumeration_name,
    frr_le_mct_witness,
    frr_problem,
    lim_cnpar_witnesses,
    max_equiv_zero_witnesses,
    mct_ec_bridge,
)
from compana.weihrauch import (
    Verdict,
    cn_solve,
    decode_vec,
    encode_cfunc,
    encode_functional,
    encode_monotone,
    lim_problem,
    max_problem,
    mct_problem,
    reduce_check,
    zero_problem,
)

LEVEL, STAGE = 20, 1000


def near(x: CReal, value, level=LEVEL):
    return abs(x.approx(level + 2).to_fraction() - Fraction(value)) <= Fraction(1, 2**level)


# -- MAX and Z --------------------------------------------------------------------


def test_max_zero_examples():
    z_le_max, max_le_z = max_equiv_zero_witnesses()
    line = encode_cfunc(PLFunc([(0, -1), (1, 1)]))
    z = z_le_max.h_post(line, max_problem().oracle(z_le_max.k_pre(line), STAGE))
    assert near(name_to_real(z), Fraction(1, 2))
    assert zero_problem().verifier(line, z, LEVEL) is Verdict.ACCEPTED
    tent = encode_cfunc(PLFunc([(0, 0), (Fraction(1, 2), 1), (1, 0)]))
    z = max_le_z.h_post(tent, zero_problem().oracle(max_le_z.k_pre(tent), STAGE))
    assert near(name_to_real(z), Fraction(1, 2))
    flat = encode_cfunc(PLFunc([(0, 0), (1, 0)]))
    for x in (Dyadic(0), Dyadic(3, -3), Dyadic(1)):
        assert zero_problem().verifier(flat, dyadic_name(x), LEVEL) is Verdict.ACCEPTED
        assert max_problem().verifier(flat, dyadic_name(x), LEVEL) is Verdict.ACCEPTED


@pytest.mark.parametrize("name", sorted(WITNESSES))
def test_every_registered_witness_passes_its_corpus(name):
    setup = WITNESSES[name]()
    instances = setup.corpus(0)[:4]
    report = reduce_check(setup.source, setup.target, setup.witness, instances, LEVEL, STAGE)
    assert report.all_accepted, report


# -- FRR <= MCT ---------------------------------------------------------------------


def recover(coeffs, stage=200):
    y = EllTwoVec.from_coeffs(coeffs)
    x = encode_functional(functional_from_vec(y))
    w = frr_le_mct_witness()
    answer = mct_problem().oracle(w.k_pre(x), stage)
    return decode_vec(w.h_post(x, answer))


def test_frr_le_mct_examples():
    e0 = recover([1])
    assert near(e0.coeff(0), 1) and near(e0.coeff(1), 0)
    zero = recover([])
    assert all(near(zero.coeff(n), 0) for n in range(5))
    v = recover([Fraction(3, 5), Fraction(4, 5)])
    assert near(v.coeff(0), Fraction(3, 5)) and near(v.coeff(1), Fraction(4, 5)) and near(v.coeff(2), 0)


def test_frr_round_trip_on_dense_points():
    coeffs = [Fraction(1, 2), Fraction(-1, 4), 0, Fraction(1, 8)]
    f = functional_from_vec(EllTwoVec.from_coeffs(coeffs))
    g = functional_from_vec(recover(coeffs))
    for i in range(32):
        assert abs(g(dense_unit_ball(i)).approx(18) - f.on_dense(i).approx(18)) <= Dyadic(1, -16)


def test_recovered_tail_bounds_are_sound():
    coeffs = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]
    y = recover(coeffs)
    for n in range(6):
        assert y.tail_sq(n) >= sum(c * c for c in coeffs[n:])
    assert near(y.norm_sq(), sum(c * c for c in coeffs), 16)


def test_frr_verifier_rejects_wrong_vector():
    from compana.weihrauch import encode_vec

    x = encode_functional(functional_from_vec(EllTwoVec.from_coeffs([Fraction(1, 2)])))
    wrong = encode_vec(EllTwoVec.from_coeffs([Fraction(1, 4)]))
    assert frr_problem().verifier(x, wrong, 10) is Verdict.REJECTED


# -- EC via FRR ---------------------------------------------------------------------


def characteristic(elements, stage=64):
    g = enumeration_name(elements, gaps=1)
    w = ec_via_frr_witness()
    y = frr_problem().oracle(w.k_pre(g), stage)
    return w.h_post(g, y), decode_vec(y)


def test_ec_via_frr_worked_example():
    chi, y = characteristic([1, 3])
    assert chi.prefix(8) == [0, 1, 0, 1, 0, 0, 0, 0]
    assert near(y.norm_sq(), Fraction(17, 256), 30)


def test_ec_via_frr_small_cases():
    chi, y = characteristic([])
    assert chi.prefix(16) == [0] * 16 and near(y.norm_sq(), 0, 30)
    chi, y = characteristic([0])
    assert chi.prefix(16) == [1] + [0] * 15 and near(y.norm_sq(), Fraction(1, 4), 30)


def test_digit_readout_is_exact_on_even_digit_reals():
    for mask in range(0, 1 << 10, 37):
        a = {n for n in range(10) if mask >> n & 1}
        x = CReal.constant(sum((Fraction(1, 4 ** (n + 1)) for n in a), Fraction(0)))
        assert {n for n in range(12) if digit_readout(x).at(n)} == a


def test_ec_problem_domain_rejects_repeats():
    from compana.weihrauch import DomainStatus

    repeated = Name.from_list([2, 0, 2])
    assert ec_problem().domain_check(repeated, 10) is DomainStatus.VIOLATED


# -- MCT <-> EC ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "seq, sup",
    [
        (MonotoneSeq(lambda n: CReal.constant(Fraction(1, 2)), Dyadic(1)), Fraction(1, 2)),
        (specker_seq(StageSet.injected({1: 2, 3: 5})), Fraction(5, 8)),
        (MonotoneSeq(lambda n: CReal.constant(1 - Dyadic(1, -n)), Dyadic(1)), Fraction(1)),
    ],
)
def test_mct_ec_round_trip(seq, sup):
    mct_le_ec, _ = mct_ec_bridge()
    x = encode_monotone(seq)
    chi = ec_problem().oracle(mct_le_ec.k_pre(x), STAGE)
    assert near(name_to_real(mct_le_ec.h_post(x, chi)), sup)


def test_ec_le_mct_reads_digits():
    _, ec_le_mct = mct_ec_bridge()
    g = enumeration_name([4, 0, 7], gaps=2)
    answer = mct_problem().oracle(ec_le_mct.k_pre(g), 50)
    assert {n for n in range(12) if ec_le_mct.h_post(g, answer).at(n)} == {0, 4, 7}


# -- BIM ----------------------------------------------------------------------------


def test_bim_examples():
    y = EllTwoVec.from_coeffs([Fraction(1, 2), Fraction(1, 2), Fraction(1, 4)])
    ident = bim_via_cn(DiagonalOperator((), Dyadic(1)), y, LEVEL)
    assert ident.k == 0 and ident.mind_changes == 0 and ident.certified
    assert all(near(ident.vec.coeff(n), y.exact.get(n, 0)) for n in range(4))

    halves = bim_via_cn(DiagonalOperator((), Dyadic(1, -1)), EllTwoVec.unit(0), LEVEL)
    assert near(halves.vec.coeff(0), 2) and near(halves.vec.coeff(1), 0) and halves.certified

    op = DiagonalOperator((Dyadic(1), Dyadic(1, -1)), Dyadic(1, -2))
    r = bim_via_cn(op, y, LEVEL)
    expected = [Fraction(1, 2), 1, 1, 0]
    assert all(near(r.vec.coeff(n), v) for n, v in enumerate(expected))
    assert r.k == 2 and r.certified
    assert r.mind_changes <= op.stabilization_index()


def test_bim_exclusions_refute_exactly_small_k():
    op = DiagonalOperator((Dyadic(1, -3), Dyadic(1), Dyadic(1, -5)), Dyadic(1, -1))
    k, _ = cn_solve(bim_exclusions(op), 500)
    assert k == 5 and Dyadic(1, -k) <= op.minimum


def test_bim_tail_bound_scales():
    op = DiagonalOperator((), Dyadic(1, -2))
    y = EllTwoVec.from_coeffs([Fraction(1, 2), Fraction(1, 2)])
    r = bim_via_cn(op, y, LEVEL)
    assert r.vec.tail_sq(0) >= 16 * Fraction(1, 2)


# -- lim and parallelized choice ------------------------------------------------------


def test_cn_le_lim_guess_stream():
    cn_le_lim, _ = lim_cnpar_witnesses()
    p = Name.from_list([1, 2, 3])
    guesses = cn_le_lim.k_pre(p)
    assert lim_problem().oracle(guesses, 50).at(0) == 3


def test_lim_le_cnpar_settling_at_five():
    _, lim_le_cnpar = lim_cnpar_witnesses()
    seq = seq_tupling(lambda k: Name.from_list([k if k < 5 else 5, 9, k % 2 if k < 3 else 1]))
    instance = lim_le_cnpar.k_pre(seq)
    # position 0 changes at every index below 5: its C_N instance excludes 0..4
    answer, _ = cn_solve(seq_project(instance, 0), 2000)
    assert answer == 5
    # position 1 never changes: nothing is excluded
    assert cn_solve(seq_project(instance, 1), 2000) == (0, 0)
    from compana.weihrauch import cn_problem, parallelize

    y = parallelize(cn_problem()).oracle(instance, 2000)
    assert lim_le_cnpar.h_post(seq, y).prefix(3) == [5, 9, 1]
