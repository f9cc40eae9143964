"""
MFEF 计算工具 - 主程序
=====================
计算 N 体 d 维密度矩阵的多体完全纠缠分数 (MFEF)

使用方法:
    python main.py compute state.json [--solver auto|qubit|qudit|analytic]
    python main.py bounds state.json
    python main.py make-state theorem3 --c 0.6 --n 2 --out state.json
    python main.py oracle state.json --samples 10000
    python main.py verify state.json unitaries.json

stdout 只输出一个 JSON 文档，诊断信息写到 stderr。
退出码: 0 成功，2 输入错误，3 没有收敛的重启（仍输出报告）。
"""

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config.settings import SystemConfig, load_config_from_file
from modules import __version__
from modules.pipeline import FAMILIES, SOLVERS, MfefPipeline
from utils.errors import ConfigurationError, InputValidationError, MfefError
from utils.logger import get_logger, log_manager
from utils.state_io import read_unitaries_file

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


def _probabilities(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"概率向量格式错误: {text}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="随机种子")
    common.add_argument("--restarts", type=int, help="重启次数")
    common.add_argument("--tol", type=float, help="每轮目标函数增益阈值")
    common.add_argument("--threads", type=int, help="并行线程上限")
    common.add_argument("--solver", choices=SOLVERS, default="auto", help="求解器")
    common.add_argument("--config", help="YAML 配置文件")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    common.add_argument("--verbose", action="store_true", help="结束时输出管道统计")

    parser = argparse.ArgumentParser(prog="mfef", description="多体完全纠缠分数计算工具")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", parents=[common], help="计算 MFEF")
    compute.add_argument("path")
    compute.add_argument("--unitaries-out", help="把最优局域幺正组写到该文件")
    compute.add_argument("--pin-first-site", action="store_true", help="固定 U_1 = I")

    bounds = sub.add_parser("bounds", parents=[common], help="只计算上下界")
    bounds.add_argument("path")

    make = sub.add_parser("make-state", parents=[common], help="生成态文件")
    make.add_argument("family", choices=FAMILIES)
    make.add_argument("--d", type=int, default=2)
    make.add_argument("--n", type=int, default=2)
    make.add_argument("--p", type=_probabilities, help="概率向量，逗号分隔")
    make.add_argument("--c", type=float, help="theorem3 族的参数 c")
    make.add_argument("--rank", type=int, help="haar-mixed 的秩")
    make.add_argument("--label")
    make.add_argument("--out", help="输出路径，缺省时把态写到 stdout")

    oracle = sub.add_parser("oracle", parents=[common], help="Haar 随机采样基线")
    oracle.add_argument("path")
    oracle.add_argument("--samples", type=int)
    oracle.add_argument("--progress", action="store_true", help="在 stderr 显示进度条")

    verify = sub.add_parser("verify", parents=[common], help="验证给定幺正组的驻点条件")
    verify.add_argument("path")
    verify.add_argument("unitaries")
    return parser


class MfefCommandLine:
    """命令行前端"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.system_config = self._load_config()
        self._configure_logging()
        self.logger = get_logger("mfef.cli")
        self.pipeline = MfefPipeline(self.system_config)
        self.pipeline.add_error_callback(self.on_error)

    def _load_config(self) -> SystemConfig:
        base = load_config_from_file(self.args.config) if self.args.config else SystemConfig()
        base.apply_env_overrides()
        base.solver = base.solver.with_overrides(
            seed=self.args.seed,
            restarts=self.args.restarts,
            objective_tol=self.args.tol,
            threads=self.args.threads,
            pin_first_site=getattr(self.args, "pin_first_site", False) or None,
        )
        return base

    def _configure_logging(self):
        level = self.args.log_level or self.system_config.logging.level
        log_manager.configure(
            log_level=level,
            enable_console=self.system_config.logging.enable_console,
            enable_file=self.system_config.logging.enable_file,
            log_dir=self.system_config.logging.log_dir,
            max_file_size=self.system_config.logging.max_file_size,
            backup_count=self.system_config.logging.backup_count,
        )

    def on_error(self, error_msg: str):
        print(f"error: {error_msg}", file=sys.stderr)

    def emit(self, document: Dict[str, Any]):
        """向 stdout 写出唯一的 JSON 文档"""
        sys.stdout.write(json.dumps(document, ensure_ascii=False) + "\n")
        sys.stdout.flush()

    def cmd_compute(self) -> int:
        report = self.pipeline.compute(self.args.path, self.args.solver,
                                       unitaries_out=self.args.unitaries_out)
        self.emit(report.to_dict())
        return EXIT_OK if report.converged else EXIT_NOT_CONVERGED

    def cmd_bounds(self) -> int:
        self.emit(self.pipeline.bounds_report(self.args.path).to_dict())
        return EXIT_OK

    def cmd_make_state(self) -> int:
        a = self.args
        seed = a.seed if a.seed is not None else self.system_config.solver.seed
        sf = self.pipeline.make_state(a.family, d=a.d, n=a.n, p=a.p, c=a.c, rank=a.rank,
                                      seed=seed, out=a.out, label=a.label)
        if a.out:
            self.emit({"command": "make-state", "family": a.family, "path": a.out,
                       "d": sf.d, "n": sf.n, "label": sf.label})
        else:
            self.emit(sf.to_dict())
        return EXIT_OK

    def cmd_oracle(self) -> int:
        report = self.pipeline.oracle(self.args.path, self.args.samples, self.args.seed,
                                      self.args.progress or None)
        self.emit(report.to_dict())
        return EXIT_OK

    def cmd_verify(self) -> int:
        us = read_unitaries_file(self.args.unitaries)
        self.emit(self.pipeline.verify(self.args.path, us).to_dict())
        return EXIT_OK

    def run(self) -> int:
        handler = getattr(self, "cmd_" + self.args.command.replace("-", "_"))
        return handler()


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口，返回退出码"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    cli = None
    try:
        cli = MfefCommandLine(args)
        return cli.run()
    except (InputValidationError, ConfigurationError) as e:
        if cli is not None:
            cli.pipeline.report_error(str(e), error_type="validation")
        else:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except MfefError as e:
        if cli is not None:
            cli.pipeline.report_error(str(e), error_type="solver")
        else:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        if cli is not None and args.verbose:
            cli.logger.info("Pipeline status", **cli.pipeline.get_pipeline_status()["performance_stats"])


if __name__ == "__main__":
    sys.exit(main())
