#!/usr/bin/env python3
"""
无反射势重构 - 命令行版本
由束缚态谱重构势能、正向验证、导出波函数与基准测试
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

# 添加src目录到Python路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from config_manager import AppSettings, ConfigManager  # noqa: E402
from errors import ReconstructionError, VerificationFailed  # noqa: E402
from formats import make_grid, parse_grid, parse_int_range, render_json, write_text  # noqa: E402
from naive_oracle import benchmark  # noqa: E402
from spectra_gen import resolve_preset  # noqa: E402
from spectral_core import SpectralInput, ValidatedSpectrum, load_spectral_input, validate  # noqa: E402
from tau_engine import build_expansion, describe, sample_potential  # noqa: E402
from verify import verify_spectrum  # noqa: E402
from wavefunctions import WavefunctionSet  # noqa: E402

logger = logging.getLogger("cli")

COMMANDS = ("reconstruct", "verify", "wavefunctions", "bench", "spectrum")
EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_VERIFY = 3


class InverseScatteringCLI:
    def __init__(self, config_dir: Optional[str] = None):
        self.config_manager = ConfigManager(config_dir=config_dir)
        self.settings = AppSettings(self.config_manager)

    def load_input(self, args: argparse.Namespace) -> SpectralInput:
        """--preset 优先；--input 既可以是 JSON 文件也可以是预设名"""
        if args.preset:
            spectral_input = resolve_preset(args.preset)
        elif args.input:
            if not Path(args.input).exists() and ":" in args.input:
                spectral_input = resolve_preset(args.input)
            else:
                spectral_input = load_spectral_input(args.input)
        else:
            raise ReconstructionError("需要 --preset 或 --input 之一")
        if args.c_phys is not None:
            spectral_input = dataclasses.replace(spectral_input, c_phys=args.c_phys)
        return spectral_input

    def load_spectrum(self, args: argparse.Namespace) -> ValidatedSpectrum:
        spectrum = validate(self.load_input(args), self.settings.gap_rel_tolerance)
        logger.info(f"谱: N={spectrum.n}, κ={list(spectrum.kappas)}")
        return spectrum

    def grid(self, args: argparse.Namespace):
        if args.grid:
            return make_grid(*parse_grid(args.grid))
        grid = self.settings.default_grid
        return make_grid(grid["min"], grid["max"], grid["step"])

    def _emit(self, text: str, args: argparse.Namespace, what: str):
        write_text(text, args.output)
        if args.output and args.output != "-":
            print(f"✅ {what}已写入 {args.output}")

    def cmd_reconstruct(self, args: argparse.Namespace) -> int:
        spectrum = self.load_spectrum(args)
        expansion = build_expansion(spectrum)
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("展开项:\n" + describe(expansion, 16))
        curve = sample_potential(expansion, self.grid(args), self.settings.workers)
        text = curve.to_json() if args.format == "json" else curve.to_csv()
        self._emit(text, args, "势能曲线")
        return EXIT_OK

    def cmd_verify(self, args: argparse.Namespace) -> int:
        spectrum = self.load_spectrum(args)
        grid = self.grid(args) if args.grid else None
        report, _ = verify_spectrum(
            spectrum,
            domain_factor=self.settings.verify_domain_factor,
            step_factor=self.settings.verify_step_factor,
            k_factors=self.settings.reflection_k_factors,
            grid=grid,
            workers=self.settings.workers,
        )
        self._emit(report.to_json(), args, "验证报告")

        energy_tolerance = args.tolerance if args.tolerance is not None else self.settings.energy_tolerance
        failed = report.failures(energy_tolerance, self.settings.reflection_tolerance)
        if failed:
            raise VerificationFailed(
                f"验证未通过: {', '.join(failed)}",
                failed=failed,
                max_energy_residual=report.max_energy_residual,
                max_reflection=report.max_reflection,
                sum_rule=list(report.sum_rule),
            )
        return EXIT_OK

    def cmd_wavefunctions(self, args: argparse.Namespace) -> int:
        spectrum = self.load_spectrum(args)
        wavefunctions = WavefunctionSet(spectrum)
        xs = self.grid(args)
        if args.format == "json":
            psi = wavefunctions.sample(xs)
            text = render_json({
                "xs": xs.tolist(),
                "psi": [psi[:, i].tolist() for i in range(spectrum.n)],
                "kappas": list(spectrum.kappas),
                "norming": wavefunctions.norming.tolist(),
            })
        else:
            text = wavefunctions.to_csv(xs)
        self._emit(text, args, "波函数")
        return EXIT_OK

    def cmd_bench(self, args: argparse.Namespace) -> int:
        n_range = parse_int_range(args.n) if args.n else list(range(1, 11))
        points = args.points if args.points is not None else self.settings.bench_points
        report = benchmark(n_range, points, span=self.settings.bench_span, h=self.settings.naive_step)
        text = render_json(report.to_dict()) if args.format == "json" else report.to_csv()
        self._emit(text, args, "基准结果")
        return EXIT_OK

    def cmd_spectrum(self, args: argparse.Namespace) -> int:
        spectral_input = self.load_input(args)
        validate(spectral_input, self.settings.gap_rel_tolerance)
        self._emit(spectral_input.to_json(), args, "谱")
        return EXIT_OK

    def run(self, args: argparse.Namespace) -> int:
        handler = getattr(self, f"cmd_{args.command}")
        return handler(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='无反射势重构 - 命令行版本')
    parser.add_argument('command', choices=COMMANDS, help='要执行的命令')
    parser.add_argument('--preset', help='预设谱: pt:N, well:z0, morse:a')
    parser.add_argument('--input', help='谱输入 JSON 文件（或预设名）')
    parser.add_argument('--grid', help='网格 min:max:step')
    parser.add_argument('--output', '-o', help='输出文件，缺省或 - 表示标准输出')
    parser.add_argument('--format', choices=('csv', 'json'), default='csv', help='输出格式')
    parser.add_argument('--n', help='基准测试的 N 范围，如 1..10 或 1,2,5')
    parser.add_argument('--points', type=int, help='基准测试的网格点数')
    parser.add_argument('--c-phys', dest='c_phys', type=float, help='常数 C = ħ²/2m')
    parser.add_argument('--tolerance', type=float, help='验证的能量相对容差')
    parser.add_argument('--config-dir', dest='config_dir', help='配置目录')
    parser.add_argument('--verbose', '-v', action='store_true', help='输出进度日志')
    parser.add_argument('--debug', action='store_true', help='调试日志，异常时打印堆栈')
    return parser


def _attach_negative_values(argv: List[str]) -> List[str]:
    """--grid -5:5:0.01 这类以负号开头的取值会被 argparse 当成选项，改写为 --grid=-5:5:0.01"""
    joined: List[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token == '--grid' and i + 1 < len(argv) and argv[i + 1].startswith('-') \
                and not argv[i + 1].startswith('--'):
            joined.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def _report_error(payload: dict):
    sys.stderr.write(json.dumps(payload, ensure_ascii=False) + "\n")
    sys.stderr.flush()


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_attach_negative_values(argv))

    level = logging.DEBUG if args.debug else (logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s', force=True)

    try:
        app = InverseScatteringCLI(args.config_dir)
        return app.run(args)
    except VerificationFailed as e:
        _report_error(e.to_dict())
        return EXIT_VERIFY
    except ReconstructionError as e:
        _report_error(e.to_dict())
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError) as e:
        _report_error({"error": "InputError", "detail": {"message": str(e)}})
        return EXIT_INPUT
    except Exception as e:
        _report_error({"error": "InternalError", "detail": {"message": str(e)}})
        if args.debug:
            import traceback
            traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
