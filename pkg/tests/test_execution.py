"""Builder terminals, handles, history, progress, and the compute pool."""

import numpy as np
import pytest

from opsforge.errors import (
    DimensionMismatchError,
    ExecutionError,
    NoMatchError,
    PreconditionError,
)
from opsforge.runtime import ComputePool
from opsforge.stdlib import default_environment
from opsforge.values import Value, image_f64, wrap

BYTE_ARRAY = "ByteArray"


@pytest.fixture()
def env():
    return default_environment(include_legacy=False)


def _rand_image(seed, w=16, h=16):
    rng = np.random.default_rng(seed)
    return image_f64(w, h, rng.random(w * h))


def test_apply_add(env):
    assert env.op("math.add").input(2, 3).apply().payload == 5


def test_apply_rejects_mixed_types(env):
    with pytest.raises(NoMatchError):
        env.op("math.add").input(2, "x").apply()


def test_apply_leaves_inputs_unmutated(env):
    img = _rand_image(1)
    before = img.payload.copy()
    env.op("filter.gauss").input(img, wrap(1.2)).apply()
    assert np.array_equal(img.payload, before)


def test_dog_equals_manual_pipeline(env):
    img = _rand_image(2, 8, 8)
    dog = env.op("filter.dog").input(img, wrap(1.0), wrap(2.0)).apply()
    g1 = env.op("filter.gauss").input(img, wrap(1.0)).apply()
    g2 = env.op("filter.gauss").input(img, wrap(2.0)).apply()
    manual = env.op("math.sub").input(g1, g2).apply()
    assert np.array_equal(dog.payload, manual.payload)


def test_compute_copy_array(env):
    src = wrap(bytearray([7, 8]))
    dst = wrap(bytearray(2))
    env.op("copy.array").input(src).container(dst).compute()
    assert list(dst.payload) == [7, 8]


def test_compute_and_apply_agree(env):
    img = _rand_image(3)
    container = wrap(np.zeros_like(img.payload))
    env.op("filter.gauss").input(img, wrap(1.5)).container(container).compute()
    applied = env.op("filter.gauss").input(img, wrap(1.5)).apply()
    assert np.array_equal(container.payload, applied.payload)


def test_bad_container_leaves_content_intact(env):
    img = _rand_image(4, 6, 6)
    container = wrap(np.full((3, 3), 9.0))
    with pytest.raises(DimensionMismatchError):
        env.op("filter.gauss").input(img, wrap(1.0)).container(container).compute()
    assert np.array_equal(container.payload, np.full((3, 3), 9.0))


def test_mutate_increments_first_byte(env):
    data = bytearray([0, 5])
    env.op("benchmark.increment").input(wrap(data)).mutate()
    assert list(data) == [1, 5]


def test_mutate_wraps_at_256(env):
    data = bytearray([255])
    env.op("benchmark.increment").input(wrap(data)).mutate()
    assert list(data) == [0]


def test_mutate_empty_array_precondition(env):
    with pytest.raises(PreconditionError) as err:
        env.op("benchmark.increment").input(wrap(bytearray())).mutate()
    assert "non-empty" in str(err.value)


def test_execution_error_carries_plan_signature(env):
    img = wrap(np.zeros((4, 4)))
    with pytest.raises(ExecutionError) as err:
        env.op("filter.fft").input(img, wrap("forward")).apply()
    assert err.value.signature
    assert "filter/fft_stub" in err.value.signature


def test_function_handle_reuses_one_match(env):
    before = env.match_calls
    add = env.op("math.add").input_types("Integer", "Integer").function()
    matched = env.match_calls - before
    assert add(2, 3).payload == 5
    assert add(4, 5).payload == 9
    for _ in range(1000):
        add(1, 1)
    assert env.match_calls == before + matched


def test_handle_arity_checked(env):
    add = env.op("math.add").input_types("Integer", "Integer").function()
    with pytest.raises(ExecutionError):
        add(1)


def test_computer_handle(env):
    gauss = (
        env.op("filter.gauss")
        .input_types("ImageF64", "Real")
        .container_type("ImageF64")
        .computer()
    )
    img = _rand_image(5)
    out = wrap(np.zeros_like(img.payload))
    gauss(img, wrap(1.0), container=out)
    assert out.payload.any()


def test_inplace_handle(env):
    inc = env.op("benchmark.increment").input_types(BYTE_ARRAY).inplace()
    data = wrap(bytearray([9]))
    inc(data)
    assert data.payload[0] == 10


def test_handle_survives_builder_and_new_requests(env):
    add = env.op("math.add").input_types("Integer", "Integer").function()
    env.op("math.sub").input(9, 3).apply()
    assert add(2, 2).payload == 4


def test_kind_equivalence_for_increment(env):
    # one op reachable as inplace (direct), function and computer (adapted)
    data = bytearray([41, 7])
    env.op("benchmark.increment").input(wrap(data)).mutate()

    fn_result = env.op("benchmark.increment").input(wrap(bytearray([41, 7]))).apply()

    container = wrap(bytearray(2))
    env.op("benchmark.increment").input(wrap(bytearray([41, 7]))).container(
        container
    ).compute()

    assert list(data) == list(fn_result.payload) == list(container.payload) == [42, 7]


def test_history_records_dog_tree(env):
    img = _rand_image(6, 8, 8)
    out = env.op("filter.dog").input(img, wrap(1.0), wrap(2.0)).apply()
    rec = env.history.lookup(out)
    assert rec is not None
    assert "filter/dog" in rec.signature
    assert rec.signature.count("filter/gauss") == 2


def test_history_none_for_unproduced_value(env):
    assert env.history.lookup(wrap(5)) is None


def test_history_keeps_append_only_log(env):
    src = wrap(bytearray([1]))
    dst = wrap(bytearray(1))
    env.op("copy.array").input(src).container(dst).compute()
    first = env.history.lookup(dst)
    env.op("copy.array").input(wrap(bytearray([2]))).container(dst).compute()
    second = env.history.lookup(dst)
    assert second.at >= first.at
    records = [r for r in env.history.snapshot() if r.uid == dst.uid]
    assert len(records) == 2


def test_progress_monotone_one_report_per_row():
    env = default_environment(include_legacy=False)
    seen = []
    env.add_progress_listener(lambda report: seen.append(report))
    img = _rand_image(7, 5, 9)
    env.op("filter.gauss").input(img, wrap(1.0)).apply()
    fractions = [r.fraction for r in seen]
    assert fractions == sorted(fractions)
    assert fractions[-1] == 1.0
    assert len(fractions) == 9


def test_progress_listener_sees_op_label():
    env = default_environment(include_legacy=False)
    labels = set()
    env.add_progress_listener(lambda report: labels.add(report.op_label))
    env.op("filter.gauss").input(_rand_image(8, 4, 4), wrap(0.8)).apply()
    assert "filter.gauss" in labels


def test_pool_budget_bounds_parallelism():
    pool = ComputePool(budget=3)
    env = default_environment(include_legacy=False, pool=pool)
    env.op("filter.gauss").input(_rand_image(9, 32, 32), wrap(2.0)).apply()
    assert pool.peak_slots <= 3


def test_determinism_across_pool_budgets():
    img_data = np.random.default_rng(10).random((24, 24))
    outs = []
    for budget in (1, 4):
        env = default_environment(include_legacy=False, pool=ComputePool(budget))
        img = wrap(img_data.copy())
        out = env.op("filter.gauss").input(img, wrap(1.7)).apply()
        outs.append(out.payload)
    assert np.array_equal(outs[0], outs[1])


def test_repeat_runs_bitwise_equal(env):
    img = _rand_image(11)
    a = env.op("filter.dog").input(img, wrap(0.9), wrap(1.8)).apply()
    b = env.op("filter.dog").input(img, wrap(0.9), wrap(1.8)).apply()
    assert a.payload.tobytes() == b.payload.tobytes()


def test_help_namespace_lists_names(env):
    text = env.help("math")
    assert "math.add" in text
    assert "math.sub" in text
    assert "math.mul" in text


def test_help_full_name_uses_simple_type_words(env):
    text = env.help("filter.gauss")
    assert "image" in text
    assert "ImageF64" not in text


def test_help_verbose_adds_detail(env):
    text = env.help("math.add", verbose=True)
    assert "builtin:math/add_ints" in text
    assert "priority" in text


def test_help_unknown_with_suggestion(env):
    text = env.help("math.ad")
    assert "No ops found matching" in text
    assert "math.add" in text


def test_help_unknown_no_suggestions(env):
    text = env.help("zzz")
    assert "No ops found matching" in text
    assert "did you mean" not in text.lower() or "zzz" in text
