import importlib.util
from pathlib import Path


def test_benchmark_smoke(capsys):
    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--langevin-steps", "2000000", "--gillespie-t", "1", "--repeat", "1"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and lines[-1].startswith("gillespie  numpy")
