import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkcsi.diagrams import (
    BRAID, EVEN, LINK, ODD, Diagram, DiagramError, DiagramSum, canonicalize, empty_diagram,
    enumerate_basis, grading, relabel,
)
from linkcsi.differential import (
    Contractible, contract, delta, delta_sum, epsilon, loop_orientation, shuffle, shuffle_sums,
    targets,
)

TRIPOD = Diagram(1, ODD, LINK, (3,), 1, ((1, 4), (2, 4), (3, 4)))
H = Diagram(1, ODD, LINK, (4,), 2, ((1, 5), (2, 5), (5, 6), (3, 6), (4, 6)))
CHORD_1 = Diagram(1, ODD, LINK, (2,), 0, ((1, 2),))


def test_contract_tripod_leg():
    got = contract(TRIPOD, Contractible(edge=0))
    assert got == Diagram(1, ODD, LINK, (3,), 0, ((2, 1), (3, 1)))


def test_contract_arc_of_chord_gives_loop():
    got = contract(CHORD_1, Contractible(arc=(1, 2)))
    assert got == Diagram(1, ODD, LINK, (1,), 0, ((1, 1),))


def test_contract_internal_edge_of_h():
    got = contract(H, Contractible(edge=2))
    assert got.n_int == 1 and got.valence(5) == 4


def test_chords_and_loops_not_contractible():
    with pytest.raises(DiagramError):
        contract(CHORD_1, Contractible(edge=0))
    loop = Diagram(1, ODD, LINK, (1,), 0, ((1, 1),))
    with pytest.raises(DiagramError):
        contract(loop, Contractible(edge=0))


def test_loop_inherits_chord_direction():
    back = Diagram(1, ODD, LINK, (2,), 0, ((2, 1),))
    assert loop_orientation(back, Contractible(arc=(1, 2))) == -1
    assert delta(back) == delta(CHORD_1).scale(-1)


def test_end_arcs_are_not_targets():
    chord = Diagram(2, ODD, BRAID, (1, 1), 0, ((1, 2),))
    assert targets(chord) == []
    with pytest.raises(DiagramError):
        contract(chord, Contractible(arc=(1, 2)))


def test_epsilon_odd():
    d = Diagram(1, ODD, LINK, (2,), 2, ((1, 3), (4, 2), (3, 4), (3, 4)))
    assert epsilon(d, Contractible(edge=0)) == -1      # 1 -> 3
    assert epsilon(d, Contractible(edge=1)) == -1      # 4 -> 2


def test_epsilon_even_uses_label():
    d = Diagram(1, EVEN, LINK, (4,), 2, ((1, 5), (2, 5), (5, 6), (3, 6), (4, 6)))
    assert epsilon(d, Contractible(edge=1)) == -1      # label 2, four externals


def test_delta_of_braid_chord_is_empty():
    assert delta(Diagram(2, ODD, BRAID, (1, 1), 0, ((1, 2),))) == DiagramSum()


def test_delta_of_single_chord_is_loop():
    s = delta(CHORD_1)
    loop = Diagram(1, ODD, LINK, (1,), 0, ((1, 1),))
    assert list(s.terms) == [loop]
    assert abs(s.coefficient(loop)) == 1


BASES = {args: enumerate_basis(*args) for args in [
    (1, ODD, LINK, 2, 0), (1, ODD, LINK, 2, 1), (2, ODD, BRAID, 2, 0), (2, ODD, LINK, 2, 0),
    (1, EVEN, LINK, 2, 0), (2, EVEN, LINK, 2, 1), (1, ODD, LINK, 3, 0),
]}
ALL = [d for b in BASES.values() for d in b]


@pytest.mark.parametrize("args", list(BASES))
def test_delta_squared_zero(args):
    for d in BASES[args]:
        assert delta_sum(delta(d)) == DiagramSum()


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(ALL))
def test_contraction_grading(d):
    g = grading(d)
    for t in targets(d):
        c = contract(d, t)
        if canonicalize(c).coefficient == 0:
            continue
        gc = grading(c)
        assert gc.order == g.order and gc.degree == g.degree + 1


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(ALL), st.randoms(use_true_random=False))
def test_delta_commutes_with_relabeling(d, rnd):
    perm = list(range(1, d.n_int + 1))
    rnd.shuffle(perm)
    flips = [k for k in range(len(d.edges)) if d.parity == ODD and rnd.random() < 0.5]
    eperm = list(range(len(d.edges)))
    if d.parity == EVEN:
        rnd.shuffle(eperm)
    new, sign = relabel(d, tuple(perm), tuple(eperm), flips)
    # d == sign * new, so delta(d) == sign * delta(new)
    assert delta(d) == delta(new).scale(sign)


def test_shuffle_unit():
    e = empty_diagram(1, ODD, LINK)
    assert shuffle(e, TRIPOD) == DiagramSum.of(TRIPOD)


def test_shuffle_two_chords_on_a_segment():
    # the six (2,2)-interleavings land twice on each order-2 chord diagram
    s = shuffle(CHORD_1, CHORD_1)
    assert sorted(s.terms.values()) == [2, 2, 2]
    assert set(s.terms) == {Diagram(1, ODD, LINK, (4,), 0, e) for e in
                            (((1, 2), (3, 4)), ((1, 3), (2, 4)), ((1, 4), (2, 3)))}


def test_shuffle_disjoint_segments_single_term():
    a = Diagram(2, ODD, LINK, (2, 0), 0, ((1, 2),))
    b = Diagram(2, ODD, LINK, (0, 2), 0, ((1, 2),))
    s = shuffle(a, b)
    assert len(s.terms) == 1


def test_shuffle_mismatch():
    with pytest.raises(DiagramError):
        shuffle(CHORD_1, Diagram(2, ODD, LINK, (1, 1), 0, ((1, 2),)))


SMALL = enumerate_basis(1, ODD, LINK, 1, 0) + enumerate_basis(1, ODD, LINK, 1, 1)


@pytest.mark.parametrize("a, b, c", list(itertools.product(SMALL, repeat=3)))
def test_shuffle_associative(a, b, c):
    left = shuffle_sums(shuffle(a, b), DiagramSum.of(c))
    right = shuffle_sums(DiagramSum.of(a), shuffle(b, c))
    assert left == right


@pytest.mark.parametrize("a, b", list(itertools.product(
    SMALL + enumerate_basis(1, ODD, LINK, 2, 0), repeat=2)))
def test_shuffle_graded_commutative(a, b):
    ab, ba = shuffle(a, b), shuffle(b, a)
    assert ab == ba or ab == ba.scale(-1)
