import argparse
import asyncio
import importlib
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from time import perf_counter
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

from ext.config import ConfigDict, ConfigManager, KindSchema
from ext.errors import ConfigurationError, LabError
from ext.report import VERSION, RunReport, Verdict
from ext.scenario import Cog, Scenario, ScenarioContext
from ext.utility import format_duration

COGS = Path(__file__).resolve().parent / 'cogs'


class ulamlab:
    def __init__(self, dev_mode: bool=None) -> None:
        self.dev_mode = os.getenv('ULAMLAB_DEV') == '1' if dev_mode is None else dev_mode
        self.cogs: Dict[str, Cog] = {}
        self.scenarios: Dict[str, Tuple[Cog, Scenario]] = {}

        # Set up logging
        self.logger = logging.getLogger('ulamlab')
        if self.dev_mode:
            self.logger.setLevel(logging.DEBUG)
        else:
            self.logger.setLevel(logging.INFO)
        if not self.logger.handlers:
            handler = logging.StreamHandler(sys.stdout)
            handler.setFormatter(logging.Formatter('%(asctime)s:%(levelname)s:%(name)s: %(message)s'))
            self.logger.addHandler(handler)

        self.load_extensions()
        self.config = ConfigManager(self.kinds)

    def load_extensions(self) -> None:
        for i in sorted(os.listdir(COGS)):
            if i.endswith('.py') and not i.startswith('_'):
                try:
                    module = importlib.import_module(f'cogs.{i.replace(".py", "")}')
                    module.setup(self)  # type: ignore
                except Exception:
                    self.logger.exception(f'Failed to load cogs/{i}')
                else:
                    self.logger.info(f'Loaded {i}')
        self.logger.info('All extensions loaded.')

    def add_cog(self, cog: Cog) -> None:
        name = cog.__class__.__name__
        if name in self.cogs:
            raise ValueError(f'Cog {name} is already loaded')
        for s in cog.scenarios:
            if s.kind in self.scenarios:
                raise ValueError(f'Scenario kind {s.kind} is registered twice')
            self.scenarios[s.kind] = (cog, s)
        self.cogs[name] = cog

    @property
    def kinds(self) -> Dict[str, KindSchema]:
        return {kind: s.schema for kind, (_, s) in self.scenarios.items()}

    def list_scenarios(self) -> List[str]:
        return [self.scenarios[k][1].signature for k in sorted(self.scenarios)]

    def validate(self, path: str) -> List[str]:
        """Every problem with the config at ``path``, without running it"""
        try:
            data = self.config.read(path)
        except ConfigurationError as e:
            return e.problems
        return self.config.validate(data)

    def run_config(self, config: ConfigDict) -> RunReport:
        """Runs one validated config and returns its report, errors included"""
        started = datetime.now(timezone.utc)
        start = perf_counter()

        ctx = ScenarioContext(config)
        cog, s = self.scenarios[ctx.kind]
        self.logger.debug(f'Running {ctx.kind} on {ctx.window.describe()}')
        try:
            s.run(cog, ctx)
        except Exception as e:
            self.on_scenario_error(ctx, e)
        self.check_witness(ctx.report)

        ctx.report.metadata.update(
            duration=perf_counter() - start,
            started=started.isoformat(),
            version=VERSION
        )
        return ctx.report

    def check_witness(self, report: RunReport) -> None:
        """A verdict that needs a witness and lacks one is an engine failure"""
        if report.verdict is None or not report.verdict.needs_witness or report.witness is not None:
            return
        self.logger.error(f'{report.kind}: {report.verdict} was reached without a witness')
        report.witness = {'check': 'witness present', 'verdict': report.verdict}
        report.verdict = Verdict.ENGINE_FAILURE

    def on_scenario_error(self, ctx: ScenarioContext, e: Exception) -> None:
        report = ctx.report
        if isinstance(e, LabError):
            report.verdict = Verdict(e.verdict)
            report.witness = e.witness if e.witness is not None else str(e)
            report.details['error'] = str(e)
            extra = getattr(e, 'details', None)
            if extra:
                report.details['error_details'] = extra
            if isinstance(e, ConfigurationError):
                self.logger.error(f'{ctx.kind}: {e}')
            else:
                self.logger.info(f'{ctx.kind}: {e}')
        else:
            self.logger.exception(f'Error while running {ctx.kind}', exc_info=(type(e), e, e.__traceback__))
            report.verdict = Verdict.ENGINE_FAILURE
            report.witness = {'exception': type(e).__name__, 'message': str(e)}

    @staticmethod
    def status(report: RunReport) -> int:
        """0 when the verdict matches ``expect``, 1 on a mismatch, 2 for config errors"""
        if report.verdict == Verdict.CONFIG_ERROR:
            return 2
        expect = report.scenario.get('expect')
        if expect is None:
            return int(report.verdict == Verdict.ENGINE_FAILURE)
        return int(report.verdict != Verdict(expect))

    def run(self, path: str, out: Path, seed: Optional[int]=None, fmt: str='csv') -> int:
        try:
            config = self.config.get_config(path, seed)
        except ConfigurationError as e:
            for problem in e.problems:
                self.logger.error(f'{path}: {problem}')
            return 2

        report = self.run_config(config)
        directory = out / Path(path).stem
        report.write(directory, csv_tables=fmt == 'csv' and bool(config.report.csv))
        status = self.status(report)
        self.logger.info(f'{path}: {report.kind} -> {report.verdict} (expect {report.scenario.get("expect")}, status {status}) in {format_duration(report.metadata["duration"])}')
        return status


def run_job(path: str, out: Path, seed: Optional[int], fmt: str) -> int:
    return ulamlab().run(path, out, seed, fmt)


async def run_all(paths: Sequence[str], out: Path, seed: Optional[int]=None, fmt: str='csv', jobs: int=1) -> int:
    """Runs every config, in a process pool when ``jobs`` > 1, and returns the worst status"""
    if jobs <= 1 or len(paths) <= 1:
        lab = ulamlab()
        return max((lab.run(p, out, seed, fmt) for p in paths), default=0)

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [loop.run_in_executor(pool, run_job, p, out, seed, fmt) for p in paths]
        statuses = await asyncio.gather(*futures)
    return max(statuses)


def parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog='ulamlab', description='Numerical stability lab for Cauchy-type functional equations')
    commands = root.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='run scenario configs and write reports')
    run.add_argument('configs', nargs='+')
    run.add_argument('--out', default=os.getenv('ULAMLAB_OUT', 'reports'))
    run.add_argument('--seed', type=int, default=None)
    run.add_argument('--jobs', type=int, default=int(os.getenv('ULAMLAB_JOBS', '1')))
    run.add_argument('--format', choices=('json', 'csv'), default='csv')

    commands.add_parser('scenarios', help='list the scenario kinds')

    validate = commands.add_parser('validate', help='check configs without running them')
    validate.add_argument('configs', nargs='+')
    return root


def main(argv: Sequence[str]=None) -> int:
    load_dotenv()
    args = parser().parse_args(argv)

    if args.command == 'run':
        return asyncio.run(run_all(args.configs, Path(args.out), args.seed, args.format, args.jobs))

    lab = ulamlab()
    if args.command == 'scenarios':
        for line in lab.list_scenarios():
            print(line)
        return 0

    status = 0
    for path in args.configs:
        problems = lab.validate(path)
        if problems:
            status = 2
            for problem in problems:
                print(f'{path}: {problem}')
        else:
            print(f'{path}: ok')
    return status


if __name__ == '__main__':
    sys.exit(main())
