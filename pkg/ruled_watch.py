# ruled_watch.py
"""Re-run a verification command whenever its config file is saved"""

import argparse
import os
import time

from watchdog.events import FileSystemEventHandler
from watchdog.observers import Observer


class ConfigChangeHandler(FileSystemEventHandler):
    def __init__(self, config_file: str, rerun):
        super().__init__()
        self.config_file = os.path.abspath(config_file)
        self.rerun = rerun
        self.last_code = None

    def on_modified(self, event):
        if event.is_directory or os.path.abspath(event.src_path) != self.config_file:
            return
        print(f"🔄 Change detected: {event.src_path}")
        self.last_code = self.rerun()

    on_created = on_modified


def _runner(config_file: str, command: str, verbose: bool):
    from ruled_verify import run_command

    args = argparse.Namespace(config=config_file, surface=None, seed=None, samples=None, oracle_samples=None,
                              theta=None, grid=None, report=None, csv=None, equivariance=False, verbose=verbose)
    return lambda: run_command(command, args)


def watch_config(config_file: str, command: str, verbose: bool = False, poll: float = 1.0) -> int:
    """Run once, then again on every change until interrupted; returns the last exit code"""
    from ruled_verify import EXIT_USAGE, print_error, print_info

    if not os.path.exists(config_file):
        print_error(f"Config file not found: {config_file}")
        return EXIT_USAGE

    rerun = _runner(config_file, command, verbose)
    handler = ConfigChangeHandler(config_file, rerun)
    handler.last_code = rerun()

    observer = Observer()
    observer.schedule(handler, os.path.dirname(os.path.abspath(config_file)), recursive=False)
    observer.start()
    print_info(f"Watching {config_file} for changes (Ctrl+C to stop)")
    try:
        while True:
            time.sleep(poll)
    except KeyboardInterrupt:
        observer.stop()
    observer.join()
    return handler.last_code
