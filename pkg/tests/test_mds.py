import itertools
import random

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from znec.galois import InconsistentSystem
from znec.mds import (
    DecodeFailure,
    FieldTooSmall,
    InsufficientData,
    is_mds,
    make_mds,
    mds_encode,
    mds_erasure_decode,
    mds_error_decode,
)


def _minor_dets(code):
    G = code.generator.to_rows()
    for cols in itertools.combinations(range(code.length), code.dim):
        sub = sympy.Matrix([[G[i][j] for j in cols] for i in range(code.dim)])
        yield cols, int(sub.det()) % code.q


def test_small_code_minors_nonsingular():
    code = make_mds(2, 3, 7)
    dets = dict(_minor_dets(code))
    assert len(dets) == 3 and all(dets.values())


def test_full_length_is_identity():
    code = make_mds(4, 4, 5, seed=3)
    assert code.generator.to_rows() == [[int(i == j) for j in range(4)] for i in range(4)]


def test_3_7_all_subsets_full_rank():
    code = make_mds(3, 7, 11)
    dets = list(_minor_dets(code))
    assert len(dets) == 35 and all(d for _, d in dets)
    assert is_mds(code)


def test_systematic_layout():
    code = make_mds(3, 7, 11, seed=5)
    G = code.generator.to_rows()
    assert [r[:3] for r in G] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert [r[3:] for r in G] == code.parity.to_rows()
    assert code.distance == 5


def test_unit_message_reads_parity():
    code = make_mds(2, 3, 7)
    eta = code.parity.to_rows()[0][0]
    assert mds_encode(code, [1, 0]) == [1, 0, eta]
    assert mds_encode(code, [0, 0]) == [0, 0, 0]


def test_field_too_small():
    with pytest.raises(FieldTooSmall, match="field too small"):
        make_mds(2, 5, 5)


def test_encode_length_mismatch():
    with pytest.raises(ValueError):
        mds_encode(make_mds(2, 4, 7), [1, 2, 3])


def test_erasure_decode_every_subset():
    code = make_mds(3, 7, 11, seed=1)
    msg = [4, 0, 9]
    cw = mds_encode(code, msg)
    for cols in itertools.combinations(range(7), 3):
        assert mds_erasure_decode(code, {c: cw[c] for c in cols}) == msg
    assert mds_erasure_decode(code, dict(enumerate(cw))) == msg


def test_erasure_decode_flags_inconsistency():
    code = make_mds(3, 7, 11, seed=1)
    cw = mds_encode(code, [1, 2, 3])
    known = {0: cw[0], 1: (cw[1] + 1) % 11, 2: cw[2], 5: cw[5]}
    with pytest.raises(InconsistentSystem):
        mds_erasure_decode(code, known)
    with pytest.raises(InsufficientData):
        mds_erasure_decode(code, {0: 1, 1: 2})


def test_error_decode_two_errors():
    code = make_mds(3, 7, 11, seed=2)
    msg = [7, 1, 3]
    cw = mds_encode(code, msg)
    for a, b in itertools.combinations(range(7), 2):
        r = list(cw)
        r[a] = (r[a] + 3) % 11
        r[b] = (r[b] + 5) % 11
        assert mds_error_decode(code, r, 2) == msg


def test_error_decode_reports_failure_beyond_radius():
    code = make_mds(3, 7, 11, seed=2)
    codewords = [mds_encode(code, list(m)) for m in itertools.product(range(11), repeat=3)]
    rng = random.Random(0)
    found = 0
    while found < 5:
        r = [rng.randrange(11) for _ in range(7)]
        if min(sum(x != y for x, y in zip(r, c)) for c in codewords) > 2:
            with pytest.raises(DecodeFailure):
                mds_error_decode(code, r, 2)
            found += 1


def test_error_decode_radius_precondition():
    code = make_mds(3, 7, 11)
    with pytest.raises(ValueError):
        mds_error_decode(code, [0] * 7, 3)


def test_error_decode_with_erasures():
    code = make_mds(2, 7, 11, seed=9)
    msg = [3, 8]
    r = mds_encode(code, msg)
    r[0] = 0
    r[1] = 0
    r[4] = (r[4] + 1) % 11
    assert mds_error_decode(code, r, 1, erasures=[0, 1]) == msg


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 10 ** 6))
def test_puncture_roundtrip(dim, extra, seed):
    length = dim + extra
    code = make_mds(dim, length, 13, seed=seed)
    rng = random.Random(seed)
    msg = [rng.randrange(13) for _ in range(dim)]
    cw = mds_encode(code, msg)
    cols = rng.sample(range(length), dim)
    assert mds_erasure_decode(code, {c: cw[c] for c in cols}) == msg


def test_nested_codes_share_points():
    from znec.mds import mds_on_points

    pts = [1, 2, 3, 5, 8, 9]
    big = mds_on_points(3, pts, 11)
    small = mds_on_points(2, pts, 11)
    B = np.array(big.generator.to_rows())
    S = np.array(small.generator.to_rows())
    from znec.galois import np_rank

    assert np_rank(np.vstack([B, S]), 11) == 3
    short = mds_on_points(3, pts[:4], 11)
    assert (B[:, :4] == np.array(short.generator.to_rows())).all()
