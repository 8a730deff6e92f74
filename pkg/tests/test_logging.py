import logging

from mbsvm.utils.logging import HistoryHandler, log_history, setup_logging


def _owned_handlers():
    return [h for h in logging.getLogger().handlers if getattr(h, "_mbsvm", False)]


def test_setup_logging_is_idempotent(tmp_path):
    setup_logging("DEBUG")
    setup_logging("WARNING", str(tmp_path / "run.log"))
    handlers = _owned_handlers()
    assert len(handlers) == 3
    assert sum(isinstance(h, HistoryHandler) for h in handlers) == 1
    assert logging.getLogger().level == logging.WARNING
    setup_logging("INFO")
    assert len(_owned_handlers()) == 2


def test_history_keeps_formatted_messages(tmp_path):
    log_file = tmp_path / "run.log"
    setup_logging("INFO", str(log_file))
    logging.warning("power iteration did not converge")
    assert log_history[-1].endswith(" - WARNING - power iteration did not converge")
    for handler in _owned_handlers():
        handler.flush()
    assert "power iteration did not converge" in log_file.read_text()
    setup_logging("INFO")
