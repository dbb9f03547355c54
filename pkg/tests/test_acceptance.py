"""Acceptance suite: ten end-to-end criteria, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines
as they happen; without -s pytest shows them for failing criteria only.
"""

import json
import random
import textwrap
import time

import numpy as np
import yaml

from opsforge.bench import run_benchmark
from opsforge.cli import main
from opsforge.indexer import emit_yaml, index_directory
from opsforge.matcher import computer_request, function_request, inplace_request
from opsforge.registry import Kind, build_environment, parse_descriptors
from opsforge.stdlib import (
    BINDINGS,
    builtin_descriptors_path,
    default_describe_table,
    default_environment,
    default_hierarchy,
    legacy_descriptors_path,
)
from opsforge.values import image_f64, wrap


def _verdict(number, label, ok, detail=""):
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {label}"
    if detail:
        line += f": {detail}"
    print(line)
    return ok


def _rand_image(seed, w, h):
    rng = np.random.default_rng(seed)
    return image_f64(w, h, rng.random(w * h))


def test_criterion_01_functional_kind_equivalence():
    env = default_environment(include_legacy=False)
    img = _rand_image(101, 16, 16)
    started = time.perf_counter()
    applied = env.op("filter.gauss").input(img, wrap(1.5)).apply()
    container = wrap(np.zeros((16, 16)))
    env.op("filter.gauss").input(img, wrap(1.5)).container(container).compute()
    elapsed = time.perf_counter() - started
    equal = np.array_equal(applied.payload, container.payload)
    ok = _verdict(
        1,
        "function-via-adaptation equals computer-into-container",
        equal and elapsed < 1.0,
        f"elementwise equal={equal}, runtime={elapsed * 1000:.0f} ms",
    )
    assert ok


def test_criterion_02_dependency_composition():
    env = default_environment(include_legacy=False)
    all_equal = True
    for seed in range(10):
        img = _rand_image(200 + seed, 8, 8)
        dog = env.op("filter.dog").input(img, wrap(1.0), wrap(2.0)).apply()
        g1 = env.op("filter.gauss").input(img, wrap(1.0)).apply()
        g2 = env.op("filter.gauss").input(img, wrap(2.0)).apply()
        manual = env.op("math.sub").input(g1, g2).apply()
        all_equal = all_equal and np.array_equal(dog.payload, manual.payload)
    tree = env.match(
        computer_request("filter.dog", ("ImageF64", "Real", "Real"), "ImageF64")
    )
    ok = _verdict(
        2,
        "dog equals hand-built gauss/gauss/sub on 10 images",
        all_equal and len(tree.children) == 3,
        f"equal={all_equal}, children={len(tree.children)}",
    )
    assert ok


def test_criterion_03_conversion_soundness():
    env = default_environment(include_legacy=False)
    data = np.arange(64, dtype=np.uint8).reshape(8, 8)
    tree = env.match(computer_request("filter.gauss", ("ImageU8", "Real"), "ImageU8"))
    converted = wrap(np.zeros((8, 8), dtype=np.uint8))
    env.op("filter.gauss").input(wrap(data.copy()), wrap(1.5)).container(
        converted
    ).compute()
    widened = env.op("engine.convert").input(wrap(data.copy())).apply()
    blurred = wrap(np.zeros((8, 8)))
    env.op("filter.gauss").input(widened, wrap(1.5)).container(blurred).compute()
    manual = env.op("engine.convert").input(blurred).apply()
    diff = float(
        np.max(np.abs(converted.payload.astype(float) - manual.payload.astype(float)))
    )

    ramp = np.arange(256, dtype=np.uint8).reshape(16, 16)
    up = env.op("engine.convert").input(wrap(ramp.copy())).apply()
    down = env.op("engine.convert").input(up).apply()
    roundtrip = np.array_equal(down.payload, ramp)

    ok = _verdict(
        3,
        "converted gauss equals manual convert/run/convert; u8 round-trip exact",
        tree.routine.name == "CONVERTED" and diff <= 1e-12 and roundtrip,
        f"routine={tree.routine.name}, max diff={diff:.2e}, roundtrip={roundtrip}",
    )
    assert ok


def test_criterion_04_reduction():
    env = default_environment(include_legacy=False)
    fft_variants = len(env.candidates("filter.fft"))
    img = image_f64(4, 2, range(8))
    out = env.op("transform.rescale2D").input(img, wrap(8)).apply()
    h, w = out.payload.shape
    ok = _verdict(
        4,
        "two optionals make 3 fft variants; omitted height keeps aspect",
        fft_variants == 3 and (w, h) == (8, 4),
        f"fft variants={fft_variants}, rescaled dims={w}x{h}",
    )
    assert ok


def _request_pool():
    return [
        function_request("math.add", ("Integer", "Integer")),
        function_request("math.plus", ("Integer", "Integer")),
        function_request("math.add", ("Real", "Real")),
        function_request("math.sub", ("Integer", "Integer")),
        function_request("math.mul", ("Real", "Real")),
        function_request("math.div", ("Real", "Real")),
        computer_request("math.add", ("Real", "Real"), "Real"),
        computer_request("filter.gauss", ("ImageF64", "Real"), "ImageF64"),
        function_request("filter.gauss", ("ImageF64", "Real")),
        computer_request("filter.gauss", ("ImageU8", "Real"), "ImageU8"),
        computer_request("filter.dog", ("ImageF64", "Real", "Real"), "ImageF64"),
        function_request("filter.fft", ("ImageF64", "Text")),
        function_request("filter.fft", ("ImageF64", "Text", "Integer")),
        inplace_request("benchmark.increment", ("ByteArray",), 0),
        inplace_request("benchmark.increment", ("RealArray",), 0),
        function_request("benchmark.increment", ("ByteArray",)),
        computer_request("copy.array", ("ByteArray",), "ByteArray"),
        computer_request("engine.copy", ("ImageF64",), "ImageF64"),
        function_request("engine.convert", ("ImageU8",), "ImageF64"),
        function_request("engine.create", ("RealArray",)),
        function_request("engine.describe", ("Real",)),
        function_request("transform.rescale2D", ("ImageF64", "Integer")),
        function_request("transform.rescale2D", ("ImageF64", "Integer", "Integer")),
        function_request("math.sub", ("ImageF64", "ImageF64")),
        function_request("stats.sum", ("RealArray",)),
        function_request("transform.reverse", ("RealArray",)),
        function_request("transform.transpose", ("ImageF64",)),
    ]


def test_criterion_05_determinism_across_load_orders(tmp_path):
    rng = random.Random(5005)
    requests = rng.sample(_request_pool(), 20)
    entries = []
    for path in (builtin_descriptors_path(), legacy_descriptors_path()):
        entries.extend(yaml.safe_load(path.read_text(encoding="utf-8"))["ops"])
    baseline = None
    rounds_equal = True
    for round_no in range(100):
        shuffled = list(entries)
        rng.shuffle(shuffled)
        doc = tmp_path / f"round.yaml"
        doc.write_text(yaml.safe_dump({"ops": shuffled}), encoding="utf-8")
        env = build_environment(
            [doc],
            BINDINGS,
            hierarchy=default_hierarchy(),
            describe_table=default_describe_table(),
            cache_enabled=False,
        )
        signatures = tuple(env.match(r).signature for r in requests)
        if baseline is None:
            baseline = signatures
        rounds_equal = rounds_equal and signatures == baseline
    ok = _verdict(
        5,
        "100 shuffled-load rounds x 20 requests give identical signatures",
        rounds_equal,
        f"distinct plans in round one: {len(set(baseline))}",
    )
    assert ok


def test_criterion_06_overhead_ordering_and_cache_effect():
    report = run_benchmark(size=1024, warmup=1000, iterations=8000, reps=3)
    mean = {r.scenario: r.mean_ns for r in report.results}
    static = mean["STATIC"]
    cached = mean["MATCHED_CACHED"]
    nocache = mean["MATCHED_NOCACHE"]
    adapted = mean["ADAPTED"]
    converted = mean["CONVERTED"]
    both = mean["ADAPTED_CONVERTED"]

    ordering = (
        static < cached < nocache
        and nocache <= adapted
        and nocache <= converted
        and adapted <= both
        and converted <= both
    )
    ratio = cached / nocache
    cache_effect = ratio <= 0.1
    additive = (both - nocache) / ((adapted - nocache) + (converted - nocache))
    additivity = 0.5 <= additive <= 1.5
    detail = (
        f"static={static:.0f} cached={cached:.0f} nocache={nocache:.0f} "
        f"adapted={adapted:.0f} converted={converted:.0f} both={both:.0f} ns; "
        f"ordering={ordering}, cached/nocache={ratio:.2f} (need <=0.10), "
        f"additivity={additive:.2f} in [0.5,1.5]={additivity}; "
        f"paper reference ~1us static / ~3us cached / ~100us matched, not asserted"
    )
    ok = _verdict(
        6, "overhead ordering, cache factor 10, additivity", ordering and cache_effect and additivity, detail
    )
    assert ok


def test_criterion_07_indexer_round_trip(tmp_path):
    (tmp_path / "demo.java").write_text(
        textwrap.dedent(
            """\
            /**
             * Copies a byte array into a preallocated buffer.
             * @implNote op names='copy.array'
             * @input src ByteArray bytes to copy
             * @container dst ByteArray receives the bytes
             */
            """
        ),
        encoding="utf-8",
    )
    first_entries, diags = index_directory(tmp_path)
    first = emit_yaml(first_entries)
    infos = parse_descriptors(first)
    shape_ok = (
        not diags
        and len(infos) == 1
        and infos[0].name == "copy.array"
        and infos[0].kind is Kind.COMPUTER
        and len(infos[0].params) == 2
    )
    second = emit_yaml(index_directory(tmp_path)[0])
    ok = _verdict(
        7,
        "tagged comment yields copy.array computer; re-index is byte-identical",
        shape_ok and first == second,
        f"shape ok={shape_ok}, byte-identical={first == second}",
    )
    assert ok


def test_criterion_08_zero_code_wrapping(tmp_path, capsys):
    builtins_only = tmp_path / "no-extras.yaml"
    builtins_only.write_text("ops: []\n", encoding="utf-8")
    legacy_code = main(
        ["--descriptors", str(builtins_only), "run", "stats.sum", "--in", "RealArray:[1.0,2.0]"]
    )
    builtin_code = main(
        ["--descriptors", str(builtins_only), "run", "math.add", "--in", "Integer:2", "--in", "Integer:3"]
    )
    out = capsys.readouterr().out
    with capsys.disabled():
        ok = _verdict(
            8,
            "without legacy yaml stats.sum exits 3 while builtins run",
            legacy_code == 3 and builtin_code == 0 and json.loads(out)["value"] == 5,
            f"stats.sum exit={legacy_code}, math.add exit={builtin_code}",
        )
    assert ok


def test_criterion_09_help_surfaces():
    env = default_environment(include_legacy=False)
    listing = env.help("math")
    names = [n for n in ("math.add", "math.sub", "math.mul", "math.div") if n in listing]
    gauss = env.help("filter.gauss")
    ok = _verdict(
        9,
        "help('math') lists 3+ names; gauss help says image, not ImageF64",
        len(names) >= 3 and "image" in gauss and "ImageF64" not in gauss,
        f"math names listed={len(names)}, plain words={'ImageF64' not in gauss}",
    )
    assert ok


def test_criterion_10_history_and_progress():
    env = default_environment(include_legacy=False)
    fractions = []
    env.add_progress_listener(lambda r: fractions.append(r.fraction))
    img = _rand_image(110, 6, 9)
    out = env.op("filter.dog").input(img, wrap(1.0), wrap(2.0)).apply()
    record = env.history.lookup(out)
    expected = env.match(
        function_request("filter.dog", ("ImageF64", "Real", "Real"))
    ).signature
    history_ok = record is not None and record.signature == expected

    fractions.clear()
    env.op("filter.gauss").input(img, wrap(1.0)).apply()
    progress_ok = (
        fractions == sorted(fractions)
        and fractions
        and fractions[-1] == 1.0
        and len(fractions) == 9
    )
    ok = _verdict(
        10,
        "history returns the dog plan; gauss progress is monotone to 1.0",
        history_ok and progress_ok,
        f"history match={history_ok}, reports={len(fractions)} rows",
    )
    assert ok
