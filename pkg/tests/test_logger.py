"""
日志系统测试
==========
"""

import pytest
import sys
import os
import logging

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.logger import LogManager, MfefLogger, log_errors, log_execution_time


class TestMfefLogger:
    """日志器测试"""

    def setup_method(self):
        self.manager = LogManager()
        self.logger = self.manager.get_logger("test_mfef_logger", enable_console=False)

    def test_message_format(self):
        assert self.logger._format_message("solve", value=1, kkt="1e-9") == "solve | value=1 | kkt=1e-9"
        assert self.logger._format_message("plain") == "plain"

    def test_error_stats(self):
        print("\n=== 测试错误统计 ===")
        self.logger.error("bad input", error_type="validation")
        self.logger.error("unknown category", error_type="network")
        stats = self.logger.get_error_stats()
        assert stats["validation_errors"] == 1
        assert stats["system_errors"] == 1
        assert stats["last_error_time"] is not None

        assert self.manager.get_all_error_stats()["test_mfef_logger"]["validation_errors"] == 1
        self.manager.reset_all_error_stats()
        assert self.logger.get_error_stats()["validation_errors"] == 0
        print("✅ 错误统计测试通过")

    def test_manager_reuses_loggers(self):
        assert self.manager.get_logger("test_mfef_logger") is self.logger
        self.manager.configure(log_level="WARNING")
        assert self.logger.logger.level == 30

    def test_file_handlers(self, tmp_path):
        logger = MfefLogger("test_mfef_file", log_dir=str(tmp_path), enable_console=False,
                            enable_file=True)
        logger.error("written", error_type="io")
        for handler in logger.logger.handlers:
            handler.flush()
        assert (tmp_path / "test_mfef_file.log").exists()
        assert "written" in (tmp_path / "test_mfef_file_errors.log").read_text(encoding="utf-8")

    def test_configure_rebuilds_existing_loggers(self, tmp_path):
        print("\n=== 测试已有日志器的重新配置 ===")
        self.manager.configure(log_level="INFO", enable_file=True, log_dir=str(tmp_path))
        assert self.logger.enable_file
        self.logger.info("after configure", sweeps=3)
        self.logger.log_performance("solve_time", 0.5, "seconds")
        assert "after configure | sweeps=3" in (tmp_path / "test_mfef_logger.log").read_text(encoding="utf-8")
        perf = (tmp_path / "test_mfef_logger_performance.log").read_text(encoding="utf-8")
        assert '"metric": "solve_time"' in perf

        self.manager.configure(enable_file=False)
        kinds = {type(h) for h in self.logger.logger.handlers}
        assert not any(issubclass(k, logging.FileHandler) for k in kinds)
        print("✅ 重新配置测试通过")


class TestDecorators:
    """装饰器测试"""

    def setup_method(self):
        self.logger = LogManager().get_logger("test_mfef_decorators", enable_console=False)

    def test_log_errors_reraises_and_counts(self):
        @log_errors(self.logger, "io")
        def fail():
            raise OSError("disk full")

        with pytest.raises(OSError):
            fail()
        assert self.logger.get_error_stats()["io_errors"] == 1

    def test_log_execution_time_passes_result(self):
        @log_execution_time(self.logger, "solve")
        def compute(x):
            return 2 * x

        assert compute(21) == 42
        assert compute.__name__ == "compute"
