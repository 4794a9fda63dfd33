import logging
import sys
from datetime import datetime, timezone
from typing import Dict, Any, Optional
import json
import os


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


class LabLogger:
    """Centralized event logging for suite runs"""

    def __init__(self, log_dir: Optional[str] = None):
        self.logger = logging.getLogger('willmore_lab')
        self.logger.setLevel(logging.INFO)

        if not self.logger.handlers:
            # Console handler; stdout is reserved for reports
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(logging.INFO)

            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            )
            console_handler.setFormatter(formatter)
            self.logger.addHandler(console_handler)

            # File handler for persistent logging
            log_dir = os.getenv('WILLMORE_LAB_LOG_DIR', 'logs') if log_dir is None else log_dir
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)
                file_handler = logging.FileHandler(os.path.join(log_dir, 'suite_runs.log'))
                file_handler.setLevel(logging.INFO)
                file_handler.setFormatter(formatter)
                self.logger.addHandler(file_handler)

    def log_suite_started(self, suite: str, surface: str, grid: str, jet_order: int,
                          precision: str, request_id: str = None):
        """Log the start of a suite run"""
        log_data = {
            "event": "suite_started",
            "suite": suite,
            "surface": surface,
            "request_id": request_id,
            "params": {
                "grid": grid,
                "jet_order": jet_order,
                "precision": precision,
            },
            "timestamp": _timestamp()
        }
        self.logger.info(f"Suite Started: {json.dumps(log_data)}")

    def log_check_result(self, suite: str, check: str, passed: bool, value: Optional[float] = None,
                         tolerance: Optional[float] = None, request_id: str = None):
        """Log a single pass/fail check"""
        log_data = {
            "event": "check_result",
            "suite": suite,
            "check": check,
            "request_id": request_id,
            "passed": passed,
            "value": value,
            "tolerance": tolerance,
            "timestamp": _timestamp()
        }
        level = logging.WARNING if not passed else logging.INFO
        self.logger.log(level, f"Check Result: {json.dumps(log_data, default=str)}")

    def log_numerical_event(self, event: str, details: Dict[str, Any] = None, request_id: str = None):
        """Log precision switches, fit-window trimming and similar adjustments"""
        log_data = {
            "event": "numerical_event",
            "kind": event,
            "request_id": request_id,
            "details": details or {},
            "timestamp": _timestamp()
        }
        self.logger.info(f"Numerical Event: {json.dumps(log_data, default=str)}")

    def log_suite_completed(self, suite: str, checks_passed: int, checks_total: int,
                            total_time: float = None, request_id: str = None):
        """Log completion of a suite run"""
        log_data = {
            "event": "suite_completed",
            "suite": suite,
            "request_id": request_id,
            "checks_passed": checks_passed,
            "checks_total": checks_total,
            "pass_rate": checks_passed / checks_total if checks_total > 0 else 0,
            "total_time_seconds": total_time,
            "timestamp": _timestamp()
        }
        level = logging.WARNING if checks_passed < checks_total else logging.INFO
        self.logger.log(level, f"Suite Completed: {json.dumps(log_data)}")

    def log_report_written(self, path: str, kind: str, request_id: str = None):
        log_data = {
            "event": "report_written",
            "path": path,
            "kind": kind,
            "request_id": request_id,
            "timestamp": _timestamp()
        }
        self.logger.info(f"Report Written: {json.dumps(log_data)}")

    def log_error(self, error_type: str, error_message: str, context: Dict[str, Any] = None,
                  suite: str = None, request_id: str = None):
        """Log errors with context"""
        log_data = {
            "event": "error",
            "error_type": error_type,
            "error_message": error_message,
            "suite": suite,
            "request_id": request_id,
            "context": context or {},
            "timestamp": _timestamp()
        }
        self.logger.error(f"Error: {json.dumps(log_data, default=str)}")


# Global logger instance
lab_logger = LabLogger()
