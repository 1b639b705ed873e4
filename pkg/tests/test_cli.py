import io
import os
import subprocess
import sys

import numpy as np
import pytest

from microshift.cli import main
from microshift.context import PredictorTable
from microshift.core import make_params, microshift_quantize
from microshift.pixelio import read_image, write_image


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    lines = dict(line.split("=", 1) for line in out.getvalue().split() if "=" in line)
    return code, lines


@pytest.fixture
def small(tmp_path, rng):
    walk = (np.cumsum(rng.integers(-5, 6, (40, 44)), axis=1) + 100) % 256
    path = tmp_path / "small.pgm"
    write_image(walk.astype(np.uint8), path)
    return path


def test_encode_decode_constant(tmp_path):
    write_image(np.full((20, 20), 70, np.uint8), tmp_path / "c.pgm")
    code, out = run("encode", "-i", tmp_path / "c.pgm", "-o", tmp_path / "c.msh")
    assert code == 0 and float(out["bpp"]) > 0
    code, out = run("decode", "-i", tmp_path / "c.msh", "-o", tmp_path / "r.pgm", "--method", "heuristic")
    assert code == 0 and out == {"method": "heuristic", "subimages": "9"}
    rec = read_image(tmp_path / "r.pgm").to_array()
    assert np.abs(rec.astype(int) - 70).max() <= 2


def test_default_subimages_equivalence(tmp_path, small):
    run("encode", "-i", small, "-o", tmp_path / "s.msh")
    run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "a.pgm", "--method", "fast")
    run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "b.pgm", "--method", "fast", "--subimages", 9)
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_usage_errors(tmp_path, small, capsys):
    with pytest.raises(SystemExit) as e:
        main(["encode", "-i", str(small), "-o", str(tmp_path / "x.msh"), "-M", "5"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["encode", "-o", str(tmp_path / "x.msh")])
    assert e.value.code == 2
    assert run("encode", "-i", tmp_path / "missing.pgm", "-o", tmp_path / "x.msh")[0] == 2
    run("encode", "-i", small, "-o", tmp_path / "s.msh")
    assert run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "r.pgm", "--subimages", 0)[0] == 2
    assert run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "r.pgm", "--subimages", 10)[0] == 2


def test_runtime_errors(tmp_path, small):
    (tmp_path / "junk.msh").write_bytes(b"not a container")
    assert run("decode", "-i", tmp_path / "junk.msh", "-o", tmp_path / "r.pgm")[0] == 1
    (tmp_path / "junk.pgm").write_bytes(b"P5\n4 4\n65535\n")
    assert run("encode", "-i", tmp_path / "junk.pgm", "-o", tmp_path / "x.msh")[0] == 1
    write_image(np.zeros((12, 12), np.uint8), tmp_path / "z.pgm")
    assert run("eval", "--reference", small, "--test", tmp_path / "z.pgm")[0] == 1
    assert run("eval", "--reference", small, "--test", tmp_path / "nope.pgm")[0] == 1
    os.mkdir(tmp_path / "empty")
    assert run("train", "--corpus", tmp_path / "empty", "-o", tmp_path / "t.msd")[0] == 1


def test_eval_identical(small, tmp_path):
    run("encode", "-i", small, "-o", tmp_path / "s.msh")
    code, out = run("eval", "--reference", small, "--test", small, "--bitstream", tmp_path / "s.msh")
    assert code == 0
    assert float(out["psnr_db"]) == 99.0 and float(out["ssim"]) == 1.0 and float(out["bpp"]) > 0


def test_train_constant_and_determinism(tmp_path, small):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for v in (10, 90, 200):
        write_image(np.full((30, 30), v, np.uint8), corpus / f"c{v}.pgm")
    code, out = run("train", "--corpus", corpus, "-o", tmp_path / "t.msd")
    assert code == 0 and out["images"] == "3"
    assert PredictorTable.load(tmp_path / "t.msd").entries == (0,) * 313

    write_image(read_image(small).to_array(), corpus / "walk.pgm")
    run("train", "--corpus", corpus, "-o", tmp_path / "t1.msd")
    run("train", "--corpus", corpus, "-o", tmp_path / "t2.msd")
    assert (tmp_path / "t1.msd").read_bytes() == (tmp_path / "t2.msd").read_bytes()

    # roundtrip with the new table through the heuristic decoder
    run("encode", "-i", small, "-o", tmp_path / "s.msh", "--table", tmp_path / "t1.msd")
    run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "r.pgm", "--method", "heuristic",
        "--table", tmp_path / "t1.msd")
    from microshift.container import CompressedContainer
    from microshift.decoder import decode_levels
    c = CompressedContainer.load(tmp_path / "s.msh")
    q = decode_levels(c, PredictorTable.load(tmp_path / "t1.msd"))[0]
    assert np.array_equal(q.levels, microshift_quantize(read_image(small).to_array(), make_params(3, 3)).levels)


def test_progressive(tmp_path, small):
    run("encode", "-i", small, "-o", tmp_path / "s.msh")
    code, out = run("progressive", "-i", tmp_path / "s.msh", "--out-prefix", tmp_path / "p")
    assert code == 0
    for k in range(1, 10):
        assert (tmp_path / f"p{k}.pgm").exists()
    run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "full.pgm")
    assert (tmp_path / "p9.pgm").read_bytes() == (tmp_path / "full.pgm").read_bytes()


def test_mrf_method_and_overrides(tmp_path, small):
    run("encode", "-i", small, "-o", tmp_path / "s.msh")
    code, _ = run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "m.pgm", "--method", "mrf",
                  "--mrf-gamma", 0.02, "--mrf-sweeps", 1)
    assert code == 0
    code, _ = run("decode", "-i", tmp_path / "s.msh", "-o", tmp_path / "w.pgm", "--wls-lambda", 2.0)
    assert code == 0


def test_rgb_roundtrip(tmp_path, rng):
    arr = rng.integers(0, 256, (15, 16, 3)).astype(np.uint8)
    write_image(arr, tmp_path / "c.ppm")
    assert run("encode", "-i", tmp_path / "c.ppm", "-o", tmp_path / "c.msh")[0] == 0
    assert run("decode", "-i", tmp_path / "c.msh", "-o", tmp_path / "r.ppm")[0] == 0
    assert read_image(tmp_path / "r.ppm").to_array().shape == (15, 16, 3)


def test_module_entry_point(tmp_path, small):
    res = subprocess.run([sys.executable, "-m", "microshift", "encode", "-i", str(small),
                          "-o", str(tmp_path / "s.msh")], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("bpp=")
    res = subprocess.run([sys.executable, "-m", "microshift", "bogus"], capture_output=True)
    assert res.returncode == 2
