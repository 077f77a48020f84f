"""Command-line runner: ``vlb complexity | compress | martingale-run | build-pair | suite``.

Exit codes: 0 pass, 1 criterion failure, 2 configuration error, 3 internal error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .coding import DESK_MACHINE, decode_Qn, encode_Qn, qn_header_constant, qn_program, with_q_decoders
from .construct import (
    DigestMismatch,
    PairArtifact,
    ScheduleError,
    StageSchedule,
    build_pair_asymmetric,
    build_pair_incompressibility,
    build_pair_martingale,
    default_pools,
)
from .kolmo import ComplexityQuery, NoWitness, complexity, complexity_table, report_csv
from .martingale import machine_pool, mixture, oracle_machine_pool, replay
from .refmachine import BASE_MACHINE, CapExceeded, ExecBudget, Machine, encode_literal
from .seqcore import BitString, interleave
from .suite import CRITERIA, CriterionResult, SuiteSettings, run_criteria

SCHEMA_VERSION = "1"
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULT_CONFIG = {
    "meta": {"schema": SCHEMA_VERSION},
    "machine": {"opcodes": "desk", "max_output": "4096"},
    "budget": {"compression": "4*n^2", "separation": "1*2n"},
    "caps": {"search": "14", "fairness_depth": "8", "transfer_max_n": "12", "max_slack": "4"},
    "schedule": {"alpha": "2,2,2", "beta": "4,4,4"},
    "pool": {"max_code_len": "10"},
    "suite": {"seed": "20240601", "kraft_sets": "500", "identity_strategies": "100",
              "savings_strategies": "200", "savings_depth": "12"},
}


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    parser: configparser.ConfigParser

    @classmethod
    def load(cls, path: Optional[str]) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.read_dict(DEFAULT_CONFIG)
        if path:
            try:
                text = Path(path).read_text()
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from None
            try:
                cp.read_string(text, source=path)
            except configparser.Error as e:
                raise ConfigError(str(e)) from None
        if cp["meta"]["schema"] != SCHEMA_VERSION:
            raise ConfigError(f"config schema {cp['meta']['schema']} is not supported (want {SCHEMA_VERSION})")
        for section in cp.sections():
            if section not in DEFAULT_CONFIG:
                raise ConfigError(f"unknown config section [{section}]")
            unknown = set(cp[section]) - set(DEFAULT_CONFIG[section])
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        cfg = cls(cp)
        cfg.settings()  # validate everything up front
        return cfg

    def get(self, section: str, key: str) -> str:
        return self.parser[section][key]

    def getint(self, section: str, key: str) -> int:
        try:
            return self.parser.getint(section, key)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer") from None

    def override(self, section: str, key: str, value) -> None:
        self.parser[section][key] = str(value)

    @property
    def canonical(self) -> str:
        return "\n".join(f"{s}.{k} = {self.parser[s][k]}" for s in sorted(DEFAULT_CONFIG)
                         for k in sorted(DEFAULT_CONFIG[s]))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical.encode()).hexdigest()[:16]

    def machine(self):
        kind = self.get("machine", "opcodes")
        if kind not in ("desk", "base"):
            raise ConfigError(f"[machine] opcodes must be 'desk' or 'base', got {kind!r}")
        base = DESK_MACHINE if kind == "desk" else BASE_MACHINE
        max_out = self.getint("machine", "max_output")
        if max_out == base.max_output:
            return base
        if max_out < 1:
            raise ConfigError("[machine] max_output must be positive")
        plain = Machine(max_output=max_out)
        return with_q_decoders(plain) if kind == "desk" else plain

    def budget(self, name: str) -> Optional[ExecBudget]:
        try:
            return ExecBudget.parse(self.get("budget", name))
        except ValueError as e:
            raise ConfigError(f"[budget] {name}: {e}") from None

    def schedule(self) -> StageSchedule:
        def ints(key):
            try:
                return tuple(int(v) for v in self.get("schedule", key).split(",") if v.strip())
            except ValueError:
                raise ConfigError(f"[schedule] {key} must be a comma-separated list of integers") from None

        try:
            sched = StageSchedule(ints("alpha"), ints("beta"), self.budget("separation"))
        except ScheduleError as e:
            raise ConfigError(str(e)) from None
        if sched.budget is None:
            raise ConfigError("[budget] separation cannot be unbounded")
        return sched

    def settings(self) -> SuiteSettings:
        machine = self.machine()
        cap = self.getint("caps", "search")
        if not 1 <= cap <= machine.enumeration_cap:
            raise ConfigError(f"[caps] search must be within 1..{machine.enumeration_cap}")
        depth = self.getint("caps", "fairness_depth")
        if not 1 <= depth <= 12:
            raise ConfigError("[caps] fairness_depth must be within 1..12")
        pool_len = self.getint("pool", "max_code_len")
        if not 1 <= pool_len <= cap:
            raise ConfigError("[pool] max_code_len must be within 1..caps.search")
        compression = self.budget("compression")
        if compression is None:
            raise ConfigError("[budget] compression cannot be unbounded")
        return SuiteSettings(
            machine=machine, search_cap=cap, fairness_depth=depth,
            kraft_sets=self.getint("suite", "kraft_sets"),
            transfer_max_n=self.getint("caps", "transfer_max_n"),
            transfer_budget=compression, schedule=self.schedule(),
            max_slack=self.getint("caps", "max_slack"),
            identity_strategies=self.getint("suite", "identity_strategies"),
            savings_strategies=self.getint("suite", "savings_strategies"),
            savings_depth=self.getint("suite", "savings_depth"),
            pool_code_len=pool_len, seed=self.getint("suite", "seed"),
        )


# ---------------------------------------------------------------------------
# output helpers


def _stamp(cfg: ExperimentConfig, machine) -> str:
    return f"# vanlambalgen {__version__} config={cfg.digest} machine={machine.digest}\n"


def _emit(text: str, out: Optional[Path], name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _bits(text: str, where: str) -> BitString:
    try:
        return BitString(text.strip())
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_complexity(cfg: ExperimentConfig, args) -> int:
    machine = cfg.machine()
    targets = [_bits(t, f"target {i + 1}") for i, t in enumerate(args.targets)]
    if args.targets_file:
        for lineno, line in enumerate(Path(args.targets_file).read_text().splitlines(), start=1):
            if line.strip() and not line.startswith("#"):
                targets.append(_bits(line, f"{args.targets_file} line {lineno}"))
    cond = _bits(args.conditional, "conditional")
    budget = ExecBudget.parse(args.budget) if args.budget else None
    cap = args.cap or cfg.getint("caps", "search")
    rows = []
    for t in targets:
        rows.append((t, cond, budget, complexity(ComplexityQuery(t, cond, budget, cap, machine))))
    _emit(_stamp(cfg, machine) + report_csv(rows), args.out, "complexity.csv")
    return EXIT_PASS


def cmd_compress(cfg: ExperimentConfig, args) -> int:
    """Q_n-compress ``a ⊎ b`` using the shortest budgeted program for ``b``."""
    machine = cfg.machine()
    a, b = _bits(args.a, "a"), _bits(args.b, "b")
    if len(a) != len(b):
        raise ConfigError("a and b must have the same length")
    budget = ExecBudget.parse(args.budget) if args.budget else cfg.budget("compression")
    cap = args.cap or cfg.getint("caps", "search")
    prog = complexity_table(machine, "", budget, cap).get(b)
    witness = prog.code if prog else encode_literal(b)
    code = encode_Qn(witness, a, machine)
    decoded = decode_Qn(code, budget, machine)
    n = len(a)
    c = n - len(witness)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "b_witness", "witness_found", "qn_code", "program_len", "bound_2n_minus_c_plus_k0", "verified"])
    w.writerow([a, b, witness, str(prog is not None).lower(), code, len(qn_program(code)),
                2 * n - c + qn_header_constant(machine), str(decoded == interleave(a, b)).lower()])
    _emit(_stamp(cfg, machine) + buf.getvalue(), args.out, "compress.csv")
    return EXIT_PASS


def cmd_martingale_run(cfg: ExperimentConfig, args) -> int:
    machine = cfg.machine()
    x = _bits(args.x, "sequence")
    cap = args.cap or cfg.getint("pool", "max_code_len")
    sched = cfg.schedule()
    if args.strategy == "pool":
        d = mixture(machine_pool(machine, cap))
        t = replay(d, x)
    elif args.strategy == "oracle-pool":
        if args.oracle is None:
            raise ConfigError("oracle-pool needs --oracle")
        d = mixture(oracle_machine_pool(machine, cap, sched.budget.allowance), kind="oracle")
        t = replay(d, x, _bits(args.oracle, "oracle"))
    else:
        code = args.strategy.removeprefix("program:")
        members = [m for m in machine_pool(machine, max(len(code), 1)) if m.code == code]
        if not members:
            raise ConfigError(f"{code!r} is not a valid program of at most {machine.enumeration_cap} bits")
        t = replay(members[0].strategy, x)
    _emit(_stamp(cfg, machine) + t.to_csv(), args.out, "transcript.csv")
    return EXIT_PASS


def cmd_build_pair(cfg: ExperimentConfig, args) -> int:
    machine = cfg.machine()
    if args.replay:
        art = PairArtifact.from_fixture(Path(args.replay).read_text(), machine)
        bad = art.replay()
        problems = art.audit()
        sys.stdout.write(f"replayed {len(art.certificates)} certificates: {len(bad)} mismatches; "
                         f"audit: {'ok' if not problems else '; '.join(problems)}\n")
        return EXIT_PASS if not bad and not problems else EXIT_FAIL
    sched = cfg.schedule()
    if sched.audit():
        raise ConfigError("; ".join(sched.audit()))
    if args.kind == "incompressibility":
        policy = "discover" if args.slack == "discover" else tuple(int(v) for v in args.slack.split(","))
        cap = args.cap or cfg.getint("caps", "search")
        try:
            art = build_pair_incompressibility(sched, policy, machine, cap, cfg.getint("caps", "max_slack"))
        except NoWitness as e:
            sys.stderr.write(f"no witness: {e}\n")
            return EXIT_FAIL
    else:
        pools = default_pools(machine, args.cap or cfg.getint("pool", "max_code_len"), sched.budget)
        build = build_pair_martingale if args.kind == "martingale" else build_pair_asymmetric
        art = build(sched, pools)
    _emit(_stamp(cfg, machine) + art.to_fixture(), args.out, f"pair_{args.kind}.txt")
    return EXIT_PASS


def _suite_files(cfg: ExperimentConfig, only: Optional[set[int]], progress=None) -> tuple[dict[str, str], list]:
    settings = cfg.settings()
    results, artifacts = run_criteria(settings, only, progress)
    stamp = _stamp(cfg, settings.machine)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "name", "status", "measured"])
    for r in results:
        w.writerow([r.number, CRITERIA[r.number], r.status, json.dumps(r.measured, sort_keys=True, default=str)])
    files = {"criteria.csv": stamp + buf.getvalue()}
    for name, art in sorted(artifacts.items()):
        if art is not None:
            files[f"{name}.txt"] = stamp + art.to_fixture()
    return files, results


def cmd_suite(cfg: ExperimentConfig, args) -> int:
    only = {int(v) for v in args.only.split(",")} if args.only else None

    def timings(r, seconds):
        sys.stderr.write(f"criterion {r.number} took {seconds:.1f} s\n")

    files, results = _suite_files(cfg, only, timings)
    if only is None or 9 in only:
        again, _ = _suite_files(cfg, only)
        same = sorted(files) == sorted(again) and all(files[k] == again[k] for k in files)
        results.append(CriterionResult(9, "byte-identical reruns", "pass" if same else "fail",
                                       {"files_compared": sorted(files)}))
    summary = {
        "tool": f"vanlambalgen {__version__}",
        "config_digest": cfg.digest,
        "machine_digest": cfg.settings().machine.digest,
        "criteria": [{"number": r.number, "name": CRITERIA[r.number], "status": r.status,
                      "measured": r.measured} for r in results],
    }
    files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n"
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
    for r in results:
        sys.stdout.write(f"criterion {r.number} [{CRITERIA[r.number]}]: {r.status.upper()}\n")
    return EXIT_FAIL if any(r.status == "fail" for r in results) else EXIT_PASS


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vlb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"vanlambalgen {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key-value config file (INI syntax)")
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--budget", help="time budget such as 4*n^2, 1*2n or unbounded")
    common.add_argument("--cap", type=int, help="program-length cap for searches and pools")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for scripts; every command is deterministic regardless")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("complexity", parents=[common], help="shortest programs for target strings")
    c.add_argument("targets", nargs="*")
    c.add_argument("--targets-file")
    c.add_argument("--conditional", default="")
    c.set_defaults(func=cmd_complexity)

    c = sub.add_parser("compress", parents=[common], help="Q_n code for a ⊎ b")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=cmd_compress)

    c = sub.add_parser("martingale-run", parents=[common], help="capital transcript of a strategy on a sequence")
    c.add_argument("x")
    c.add_argument("--strategy", default="pool", help="pool, oracle-pool or program:CODE")
    c.add_argument("--oracle")
    c.set_defaults(func=cmd_martingale_run)

    c = sub.add_parser("build-pair", parents=[common], help="build or replay a staged pair fixture")
    c.add_argument("--kind", choices=["incompressibility", "martingale", "asymmetric"], default="incompressibility")
    c.add_argument("--slack", default="discover", help="'discover' or 'B,A'")
    c.add_argument("--replay", help="fixture file to re-verify")
    c.set_defaults(func=cmd_build_pair)

    c = sub.add_parser("suite", parents=[common], help="run the acceptance criteria")
    c.add_argument("--only", help="comma-separated criterion numbers")
    c.set_defaults(func=cmd_suite)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.budget and args.command in ("suite", "build-pair"):
            cfg.override("budget", "compression", args.budget)
            cfg.settings()
        if args.cap is not None and args.command in ("complexity", "compress"):
            if not 1 <= args.cap <= cfg.machine().enumeration_cap:
                raise ConfigError(f"--cap {args.cap} outside 1..{cfg.machine().enumeration_cap}")
        return args.func(cfg, args)
    except (ConfigError, CapExceeded, DigestMismatch, ScheduleError) as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    except ValueError as e:
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - report and map to the internal-error exit code
        sys.stderr.write(f"internal error: {type(e).__name__}: {e}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
