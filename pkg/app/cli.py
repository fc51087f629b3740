# app/cli.py
"""Batch front end: `flask --app run lab <command>` and the `run(config)` dispatcher."""
import json
import logging
from io import StringIO
from pathlib import Path

import click
import numpy as np
from flask import current_app
from flask.cli import AppGroup

from . import get_setting
from .approx import little_lip_approximant
from .embeddings import (
    c0_membership_bound,
    c0_profile,
    deleeuw_map,
    functional_sup,
    sequence_embed,
    sequence_gap,
)
from .errors import EXIT_CHECK_FAILED, EXIT_OK, LabError, ParameterError
from .lip_core import (
    MCSHANE_MODES,
    LipFunction,
    lip_norm,
    lip_norm_witness,
    mcshane_extend,
    partial_lip_constant,
    random_lip_function,
    scale_profile,
    sup_norm,
)
from .loaders import load_function, load_space, write_csv
from .metric_core import (
    farthest_point_enumeration,
    interval_space,
    require_metric,
    snowflake,
    validate_metric,
)
from .mideal import (
    deleeuw_scenario,
    l_projection_check,
    region_report,
    sequence_scenario,
    three_ball_oracle,
    three_ball_witness,
)
from .models import BUILTIN_FUNCTIONS, COMMANDS, FORMATS, SCENARIOS, Check, RunConfig, RunReport

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 33


# --- Inputs ---

def _base_space(config, default_points=DEFAULT_POINTS):
    """The input space with its unsnowflaked metric d, or a uniform grid of [0, 1]."""
    if config.input:
        space = load_space(config.input, config.cloud_norm)
        require_metric(space.dist)
        return space
    return interval_space(config.points or default_points)


def _working_space(config, space):
    return snowflake(space, config.alpha) if config.alpha is not None else space


def _power(space, beta):
    """t^beta on a 1-D grid, d(x, p)^beta elsewhere."""
    if space.coords is not None and space.coords.shape[1] == 1:
        return LipFunction.from_coordinates(space, lambda t: np.abs(t) ** beta)
    return LipFunction(space, space.dist[space.base] ** beta)


def _function(config, space, working, rng):
    """The function selected by --function, on the working space."""
    choice = config.function or 'power'
    if choice == 'power':
        return _power(space, config.beta if config.beta is not None else 1.0).on(working)
    if choice == 'zero':
        return LipFunction.zero(working)
    if choice == 'random':
        return random_lip_function(working, rng)
    if not Path(choice).exists():
        raise ParameterError(
            f"--function must be a file or one of {BUILTIN_FUNCTIONS}, got {choice!r}")
    return load_function(choice, space).on(working)


def _default_deltas(space):
    hi = space.diameter / 2
    lo = space.min_positive_distance
    if not lo < hi:
        return (hi,)
    return tuple(np.geomspace(hi, lo, 12))


def _close(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


# --- Commands ---

def _validate(config, rng):
    if config.input:
        space = load_space(config.input, config.cloud_norm)
    else:
        space = interval_space(config.points or DEFAULT_POINTS, config.alpha or 1.0)
    report = validate_metric(space.dist)
    results = {'points': space.n, 'validation': report.to_dict()}
    checks = [Check('metric_axioms', report.ok,
                    {'violations': len(report.violations), 'truncated': report.truncated})]
    return results, checks, None


def _norm(config, rng):
    space = _base_space(config)
    working = _working_space(config, space)
    F = _function(config, space, working, rng)
    L = lip_norm(F)
    phi_sup = deleeuw_map(F).sup_norm()
    fsup = functional_sup(F, farthest_point_enumeration(working))
    witness = lip_norm_witness(F)
    results = {
        'lip_norm': L,
        'witness': None if witness is None else [working.label(i) for i in witness],
        'sup_norm': sup_norm(F),
        'deleeuw_sup': phi_sup,
        'functional_sup': fsup,
    }
    checks = [
        Check('deleeuw_isometry', _close(phi_sup, L), {'deleeuw_sup': phi_sup, 'lip_norm': L}),
        Check('functional_identity', _close(fsup, L), {'functional_sup': fsup, 'lip_norm': L}),
    ]
    return results, checks, None


def _snowflake(config, rng):
    space = _base_space(config)
    working = snowflake(space, config.alpha)
    report = validate_metric(working.dist)
    results = {
        'space': working.to_dict(),
        'diameter': working.diameter,
        'validation': report.to_dict(),
    }
    return results, [Check('metric_axioms', report.ok, {'violations': len(report.violations)})], None


def _profile(config, rng):
    space = _base_space(config)
    working = _working_space(config, space)
    F = _function(config, space, working, rng)
    deltas = config.deltas or _default_deltas(working)
    profile = scale_profile(F, deltas)
    L = lip_norm(F)
    results = dict(profile.to_dict(), lip_norm=L)
    if config.alpha is not None and config.function in (None, 'power'):
        beta = config.beta if config.beta is not None else 1.0
        results['expected_slope'] = (beta - config.alpha) / config.alpha
    constants = np.asarray(profile.constants)
    checks = [
        Check('constants_nonincreasing', bool(np.all(np.diff(constants) <= 0))),
        Check('bounded_by_lip_norm', bool(constants.max() <= L * (1 + 1e-12)), {'lip_norm': L}),
    ]
    return results, checks, (('delta', 'constant'), profile.rows())


def _mcshane(config, rng):
    space = _base_space(config)
    working = _working_space(config, space)
    F = _function(config, space, working, rng)
    slack = get_setting('CERT_SLACK')
    enumeration = farthest_point_enumeration(working)
    size = min(config.n or max(2, working.n // 4), working.n)
    anchors = enumeration[:size]
    g = {p: float(F.values[p]) for p in anchors}
    L, pair = partial_lip_constant(g, working.dist)
    idx = np.asarray(anchors)
    extensions, checks = {}, []
    for mode in MCSHANE_MODES:
        G = mcshane_extend(g, None, working, mode=mode)
        norm = lip_norm(LipFunction(working, G))
        extensions[mode] = {'values': G, 'lip_norm': norm}
        checks.append(Check(f'reproduces_data_{mode}', bool(np.array_equal(G[idx], F.values[idx]))))
        checks.append(Check(f'norm_preserved_{mode}', norm <= L * (1 + slack),
                            {'lip_norm': norm, 'bound': L}))
    checks.append(Check('whitney_below_mcshane',
                        bool(np.all(extensions['max']['values'] <= extensions['min']['values']))))
    results = {
        'anchors': [working.label(p) for p in anchors],
        'constant': L,
        'constant_pair': None if pair is None else [working.label(i) for i in pair],
        'extensions': extensions,
    }
    rows = [
        (working.label(i), float(F.values[i]),
         *(float(extensions[mode]['values'][i]) for mode in MCSHANE_MODES))
        for i in range(working.n)
    ]
    return results, checks, (('point', 'F', 'mcshane', 'whitney', 'mid'), rows)


def _deleeuw(config, rng):
    space = _base_space(config)
    working = _working_space(config, space)
    F = _function(config, space, working, rng)
    phi = deleeuw_map(F)
    L = lip_norm(F)
    results = {'pairs': len(phi.pair_space), 'sup_norm': phi.sup_norm(), 'lip_norm': L}
    checks = [
        Check('deleeuw_isometry', _close(phi.sup_norm(), L)),
        Check('antisymmetric', bool(np.allclose(phi.swapped().values, -phi.values,
                                                rtol=1e-12, atol=0.0))),
    ]
    if config.deltas:
        results['c0_profile'] = {'deltas': list(config.deltas),
                                 'sup': c0_profile(phi, config.deltas)}
    if config.eps is not None:
        bound = c0_membership_bound(F, config.eps)
        results['membership'] = bound.to_dict()
        checks.append(Check('packing_consistent', bound.packing_consistent))
    return results, checks, (('i', 'j', 'd', 'value'), phi.rows())


def _embed(config, rng):
    space = _base_space(config)
    working = _working_space(config, space)
    F = _function(config, space, working, rng)
    weight_base = get_setting('WEIGHT_BASE', config.weight_base)
    enumeration = farthest_point_enumeration(working)
    x = sequence_embed(F, enumeration, weight_base)
    L = lip_norm(F)
    fsup = functional_sup(F, enumeration)
    other = random_lip_function(working, rng)
    gap, distance = sequence_gap(F, other, enumeration, weight_base)
    results = {
        'enumeration': [working.label(p) for p in enumeration],
        'entries': x.to_list(),
        'weights': x.weights,
        'norm': x.norm(),
        'functional_sup': fsup,
        'lip_norm': L,
        'contraction': {'gap': gap, 'sup_distance': distance},
    }
    checks = [
        Check('functional_identity', _close(fsup, L)),
        Check('embedding_contraction', gap <= distance + 1e-12 * max(1.0, distance),
              {'gap': gap, 'sup_distance': distance}),
    ]
    rows = [(k, working.label(p), float(x.entries[k]), float(x.weights[k]))
            for k, p in enumerate(enumeration)]
    return results, checks, (('k', 'point', 'entry', 'weight'), rows)


def _approx(config, rng):
    space = _base_space(config)
    working = snowflake(space, config.alpha)
    F = _function(config, space, working, rng)
    n = config.n or 4
    step = little_lip_approximant(F, config.alpha, n, farthest_point_enumeration(working))
    anchors = np.asarray(step.anchors)
    rescale = (1.0 + 1.0 / n) ** 2
    F_on = F.values[anchors]
    f_on = step.f_n.values[anchors]
    deviation = float(np.abs(f_on - F_on).max())
    expected = (1.0 - 1.0 / rescale) * float(np.abs(F_on).max())
    cert = step.cert
    results = {'step': step.to_dict(), 'anchor_deviation': deviation,
               'expected_deviation': expected}
    if config.deltas:
        results['f_n_profile'] = scale_profile(step.f_n, config.deltas).to_dict()
    checks = [
        Check('g_norm', cert.g_norm_ok, {'value': cert.g_norm_beta, 'target': cert.target}),
        Check('diam_factor', cert.diam_ok, {'value': cert.diam_factor, 'target': cert.target}),
        Check('chain', cert.chain_ok, {'value': cert.chain_value}),
        Check('f_norm_alpha', cert.f_norm_alpha_ok, {'value': cert.f_norm_alpha}),
        Check('beta_in_range', config.alpha < step.beta_n < 1, {'beta_n': step.beta_n}),
        Check('rescaled_on_anchors',
              bool(np.allclose(f_on, F_on / rescale, rtol=1e-12, atol=1e-15))),
        Check('anchor_deviation', _close(deviation, expected),
              {'deviation': deviation, 'expected': expected}),
    ]
    rows = [(working.label(i), float(F.values[i]), float(step.G_n[i]), float(step.f_n.values[i]))
            for i in range(working.n)]
    return results, checks, (('point', 'F', 'G_n', 'f_n'), rows)


def _threeball(config, rng):
    eps = config.eps if config.eps is not None else 0.25
    tolerance = get_setting('CONTRACT_TOLERANCE')
    if config.scenario == 'sequence':
        model, f, gs, oracle = sequence_scenario(rng, sites=config.points or 64)
    else:
        alpha = config.alpha if config.alpha is not None else 0.5
        working = snowflake(_base_space(config, default_points=9), alpha)
        model, f, gs, oracle = deleeuw_scenario(rng, working, alpha)
    witness = three_ball_witness(f, *gs, eps, oracle, model, r=config.r)
    optimum = three_ball_oracle(f, *gs, model)
    regions = region_report(witness)
    results = {
        'scenario': config.scenario,
        'model': model.to_dict(),
        'witness': witness.to_dict(),
        'oracle_optimum': optimum.value,
        'regions': [region.to_dict() for region in regions],
    }
    checks = [
        Check('witness_bound', witness.achieved <= witness.bound + tolerance,
              {'achieved': witness.achieved, 'bound': witness.bound}),
        Check('oracle_dominance', optimum.value <= witness.achieved + tolerance,
              {'optimum': optimum.value, 'achieved': witness.achieved}),
        Check('oracle_within_eps', optimum.value <= 1 + eps + tolerance,
              {'optimum': optimum.value}),
        Check('regions', all(region.ok for region in regions)),
    ]
    rows = [(r.region, r.sites, r.empirical, r.theoretical, r.ok) for r in regions]
    return results, checks, (('region', 'sites', 'empirical', 'theoretical', 'ok'), rows)


def _lproj(config, rng):
    sites = config.points or 16
    trials = config.n or 1000
    failures, worst = 0, 0.0
    for _ in range(trials):
        xstar = rng.normal(size=sites)
        support = rng.random(sites) < 0.5
        outcome = l_projection_check(xstar, support)
        failures += not outcome.ok
        worst = max(worst, abs(outcome.lhs - outcome.rhs))
    results = {'trials': trials, 'sites': sites, 'failures': failures, 'worst_gap': worst}
    return results, [Check('l_projection', failures == 0, {'failures': failures})], None


_HANDLERS = {
    'validate': _validate,
    'norm': _norm,
    'snowflake': _snowflake,
    'profile': _profile,
    'mcshane': _mcshane,
    'deleeuw': _deleeuw,
    'embed': _embed,
    'approx': _approx,
    'threeball': _threeball,
    'lproj': _lproj,
}


def run(config):
    """Runs one command and returns its report. Same config and seed, same report."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    results, checks, table = _HANDLERS[config.command](config, rng)
    report = RunReport(command=config.command, config=config.to_dict(), results=results,
                       checks=checks, table=table)
    failed = [check.name for check in checks if not check.passed]
    if failed:
        logger.warning(f"{config.command}: failed checks {failed}")
    else:
        logger.info(f"{config.command}: all {len(checks)} checks passed")
    return report


def render(report, fmt):
    if fmt == 'json':
        return report.to_json()
    buffer = StringIO()
    header, rows = report.table
    write_csv(rows, header, buffer)
    return buffer.getvalue()


# --- Click surface ---

def _parse_deltas(raw):
    if raw is None:
        return None
    try:
        return tuple(float(part) for part in raw.split(',') if part.strip())
    except ValueError as e:
        raise ParameterError(f"--deltas must be comma-separated numbers, got {raw!r}") from e


_OPTIONS = [
    click.option('--input', 'input_path', type=click.Path(dir_okay=False), default=None,
                 help='Space file: JSON {points, dist, base} or CSV distance matrix.'),
    click.option('--cloud-norm', type=click.Choice(['1', '2', 'inf']), default=None,
                 help='Read --input as a CSV point cloud under this norm.'),
    click.option('--function', default=None,
                 help=f"Function file (CSV/JSON) or built-in: {', '.join(BUILTIN_FUNCTIONS)}."),
    click.option('--alpha', type=float, default=None, help='Snowflake exponent in (0, 1].'),
    click.option('--beta', type=float, default=None, help='Exponent of the power function.'),
    click.option('--eps', type=float, default=None, help='Epsilon of the 3-ball or c0 checks.'),
    click.option('--n', type=int, default=None, help='Approximation step or anchor count.'),
    click.option('--points', type=int, default=None, help='Size of generated grids or site sets.'),
    click.option('--deltas', default=None, help='Comma-separated decreasing scales.'),
    click.option('--seed', type=int, default=0, show_default=True),
    click.option('--out', type=click.Path(dir_okay=False), default=None,
                 help='Report path; stdout when omitted.'),
    click.option('--format', 'fmt', type=click.Choice(FORMATS), default='json', show_default=True),
    click.option('--r', type=int, default=None, help='Averaging count of the 3-ball witness.'),
    click.option('--weight-base', type=float, default=None,
                 help='Ratio r of the sequence weights (1 - r) r^(k-1).'),
    click.option('--scenario', type=click.Choice(SCENARIOS), default='sequence',
                 show_default=True),
]

_COMMAND_HELP = {
    'validate': 'Check the metric axioms of a distance matrix.',
    'norm': 'Lipschitz norm of a function with its de Leeuw and functional identities.',
    'snowflake': 'Snowflake a space by d^alpha and validate the result.',
    'profile': 'Scale-local Lipschitz constants and their log-log slope.',
    'mcshane': 'McShane, Whitney and midpoint extensions from farthest-point anchors.',
    'deleeuw': 'De Leeuw pair image, c0 profile and membership bound.',
    'embed': 'Weighted-sequence embedding and its contraction against the sup norm.',
    'approx': 'One little-Lipschitz approximation step with its certificate.',
    'threeball': 'Constructive 3-ball witness against the exact oracle.',
    'lproj': 'L-projection identity over random dual vectors.',
}

lab_cli = AppGroup('lab', help='Lipschitz-space computations with pass/fail reports.')


def _make_command(name):
    def command(input_path, deltas, **options):
        ctx = click.get_current_context()
        try:
            config = RunConfig(command=name, input=input_path, deltas=_parse_deltas(deltas),
                               **options)
            report = run(config)
            text = render(report, config.fmt)
        except LabError as e:
            current_app.logger.error(f"lab {name} failed: {e.message}")
            click.echo(json.dumps(e.to_dict(), sort_keys=True, default=str), err=True)
            ctx.exit(e.exit_code)
        if config.out:
            Path(config.out).write_text(text, encoding='utf-8')
            current_app.logger.info(f"report written to {config.out}")
        else:
            click.echo(text, nl=False)
        ctx.exit(EXIT_OK if report.passed else EXIT_CHECK_FAILED)

    command.__name__ = name
    command.__doc__ = _COMMAND_HELP[name]
    for option in reversed(_OPTIONS):
        command = option(command)
    return command


for _name in COMMANDS:
    lab_cli.command(_name)(_make_command(_name))
