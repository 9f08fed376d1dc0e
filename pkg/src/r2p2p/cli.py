"""Command line entry point: ``r2p2p -c node.conf <command>``.

Exit codes: 0 success, 2 usage or configuration error, 3 authorization
error, 4 validation error, 5 transport error.
"""
from __future__ import annotations

import asyncio
import functools
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from .advert import RatingElement
from .config import NodeConfig, load_config
from .errors import (
    ConfigError,
    InvalidRating,
    NotFound,
    ProtocolError,
    R2P2PError,
    Unauthorized,
    UnknownDocType,
    UnknownEntity,
    ValidationError,
)
from .node import Node
from .queryengine import QueryEngine
from .relevance import UserProfile, descriptor_code, level_code
from .render import format_human, format_lines
from .store import CredentialRegistry, Role
from .transport import TcpTransport, parse_address, serve_forever

EXIT_USAGE = 2
EXIT_UNAUTHORIZED = 3
EXIT_INVALID = 4
EXIT_TRANSPORT = 5

log = logging.getLogger("r2p2p")


def _label(exc: Exception) -> str:
    if isinstance(exc, InvalidRating):
        return "InvalidRating"
    return type(exc).__name__


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, Unauthorized):
        return EXIT_UNAUTHORIZED
    if isinstance(exc, (ValidationError, NotFound)):
        return EXIT_INVALID
    if isinstance(exc, (ProtocolError, OSError, asyncio.TimeoutError)):
        return EXIT_TRANSPORT
    return 1


def reports_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (R2P2PError, OSError) as exc:
            click.echo("error: %s: %s" % (_label(exc), exc), err=True)
            sys.exit(_exit_code(exc))

    return wrapper


def _as_level(value: str) -> str:
    try:
        return level_code(value)
    except UnknownEntity:
        return value


def _as_descriptor(value: str) -> str:
    try:
        return descriptor_code(value)
    except UnknownDocType:
        return value


def _rating_from_flags(citations, level, descriptor) -> Optional[RatingElement]:
    given = [v is not None for v in (citations, level, descriptor)]
    if not any(given):
        return None
    if not all(given):
        raise click.UsageError("--citations, --level and --descriptor must be given together")
    return RatingElement(citations, _as_level(level), _as_descriptor(descriptor))


def rating_options(required: bool):
    def decorate(func):
        func = click.option("--descriptor", required=required, help="Document type code E-G or its name.")(func)
        func = click.option("--level", required=required, help="Audience level code A-D or its user kind.")(func)
        func = click.option("--citations", type=int, required=required, help="Citation count.")(func)
        return func

    return decorate


def principal_options(func):
    func = click.option(
        "--token", envvar="R2P2P_TOKEN", required=True, help="Secret token (or set R2P2P_TOKEN)."
    )(func)
    func = click.option("--as", "principal", required=True, help="Principal id to act as.")(func)
    return func


@click.group()
@click.option(
    "-c",
    "--config",
    "config_path",
    envvar="R2P2P_CONFIG",
    type=click.Path(dir_okay=False),
    default="r2p2p.conf",
    show_default=True,
    help="Node configuration file (or set R2P2P_CONFIG).",
)
@click.option("-v", "--verbose", count=True, help="Log more; repeat for debug output.")
@click.pass_context
def main(ctx, config_path, verbose):
    """Rated-resource peer-to-peer document sharing node."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    ctx.obj = Path(config_path)


def _config(ctx) -> NodeConfig:
    return load_config(ctx.obj)


@main.command()
@click.option("--http/--no-http", default=None, help="Also run the HTTP control API on http_listen.")
@click.pass_context
@reports_errors
def serve(ctx, http):
    """Answer peer queries until interrupted."""
    cfg = _config(ctx)
    if not cfg.listen:
        raise ConfigError("config has no 'listen' address")
    store = cfg.open_store()
    node = Node(cfg.node_id, store)
    want_http = bool(cfg.http_listen) if http is None else http
    if want_http and not cfg.http_listen:
        raise ConfigError("--http needs 'http_listen' in the config")

    async def run():
        host, port = parse_address(cfg.listen)
        tasks = [serve_forever(node, host, port)]
        if want_http:
            import uvicorn

            from .service import create_app

            app = create_app(node, cfg.peers, TcpTransport(cfg.node_id))
            http_host, http_port = parse_address(cfg.http_listen)
            server = uvicorn.Server(uvicorn.Config(app, host=http_host, port=http_port, log_level="info"))
            tasks.append(server.serve())
        await asyncio.gather(*tasks)

    click.echo("%s serving %d documents on %s" % (cfg.node_id, len(store), cfg.listen), err=True)
    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--title", required=True)
@click.option("--summary", default="")
@rating_options(required=False)
@principal_options
@click.pass_context
@reports_errors
def publish(ctx, path, title, summary, citations, level, descriptor, principal, token):
    """Publish the document at PATH and print its advertisement id."""
    cfg = _config(ctx)
    rating = _rating_from_flags(citations, level, descriptor)
    store = cfg.open_store()
    cred = store.registry.authenticate(principal, token)
    adv = store.publish_document(title, summary, Path(path).read_bytes(), rating, cred)
    click.echo(adv.id)


@main.command()
@click.argument("adv_id")
@rating_options(required=True)
@principal_options
@click.pass_context
@reports_errors
def revise(ctx, adv_id, citations, level, descriptor, principal, token):
    """Replace the rating of a local document."""
    cfg = _config(ctx)
    rating = _rating_from_flags(citations, level, descriptor)
    store = cfg.open_store()
    cred = store.registry.authenticate(principal, token)
    adv = store.revise_rating(adv_id, rating, cred)
    click.echo("%s\trevision %d" % (adv.id, adv.revision))


@main.command()
@click.argument("keywords", nargs=-1, required=True)
@click.option("--level", required=True, help="Your level code A-D or user kind.")
@click.option("--doctype", default=None, help="Wanted document type E-G or its name.")
@click.option("--timeout", type=click.FloatRange(min=0, min_open=True), default=2.0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["human", "lines"]), default="human", show_default=True)
@click.pass_context
@reports_errors
def search(ctx, keywords, level, doctype, timeout, fmt):
    """Search the configured peers and print results best first."""
    cfg = _config(ctx)
    profile = UserProfile(_as_level(level), _as_descriptor(doctype) if doctype else None)
    engine = QueryEngine(TcpTransport(cfg.node_id))
    results = engine.search(list(keywords), profile, list(cfg.peers), timeout)
    report = engine.last_report
    if report.skipped_payloads:
        log.warning("skipped %d unreadable advertisements", report.skipped_payloads)
    click.echo(format_lines(results) if fmt == "lines" else format_human(results), nl=False)


@main.command()
@click.option("--timeout", type=click.FloatRange(min=0, min_open=True), default=2.0, show_default=True)
@click.pass_context
@reports_errors
def peers(ctx, timeout):
    """Handshake with every configured peer and report reachability."""
    cfg = _config(ctx)
    transport = TcpTransport(cfg.node_id)
    unreachable = 0
    for address in cfg.peers:
        try:
            reply = transport.hello(address, timeout)
        except (OSError, ProtocolError, asyncio.TimeoutError) as exc:
            unreachable += 1
            click.echo("%s\t-\tunreachable (%s)" % (address, str(exc) or type(exc).__name__))
        else:
            click.echo("%s\t%s\tok" % (address, reply.peer_id))
    if unreachable:
        sys.exit(EXIT_TRANSPORT)


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--peers", "peer_count", type=click.IntRange(min=2), default=10, show_default=True)
@click.option("--documents", type=click.IntRange(min=0), default=100, show_default=True)
@click.option("--queries", type=click.IntRange(min=0), default=50, show_default=True)
@click.option("--queriers", type=click.IntRange(min=1), default=3, show_default=True,
              help="How many peers issue queries; the rest only respond.")
@click.option("--drop-rate", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--corrupt-rate", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--timeout", type=click.IntRange(min=1), default=50, show_default=True, help="Simulated ms.")
@click.option("--level", default=None, help="Fixed profile level; random per query when omitted.")
@click.option("--doctype", default=None)
@click.option("--format", "fmt", type=click.Choice(["human", "lines"]), default="lines", show_default=True)
@reports_errors
def simulate(seed, peer_count, documents, queries, queriers, drop_rate, corrupt_rate, timeout, level, doctype, fmt):
    """Run a seeded query workload on an in-process simulated network.

    Needs no config file.  Results go to stdout; counters go to stderr.
    """
    from .sim import build_network, run_workload, seeded_corpus

    if queriers >= peer_count:
        raise click.UsageError("--queriers must be smaller than --peers")
    profile = None
    if level is not None:
        profile = UserProfile(_as_level(level), _as_descriptor(doctype) if doctype else None)
    network = build_network(
        seeded_corpus(seed, peer_count, documents), seed=seed, drop_rate=drop_rate, corrupt_rate=corrupt_rate
    )
    origins = sorted(network.nodes)[:queriers]
    done = run_workload(network, queries, origins, seed=seed, timeout=timeout, profile=profile)
    render = format_lines if fmt == "lines" else format_human
    for query in done:
        click.echo(
            "# query %d from %s: %s (level %s, doctype %s)"
            % (query.number, query.origin, " ".join(query.keywords), query.profile.level,
               query.profile.desired_descriptor or "-")
        )
        click.echo(render(query.results), nl=False)
    skipped = sum(q.skipped_payloads for q in done)
    click.echo(
        "queries=%d skipped_payloads=%d injected_corruptions=%d" % (len(done), skipped, network.delivered_corruptions),
        err=True,
    )
    for peer_id, node in sorted(network.nodes.items()):
        click.echo(
            "%s\tmessages=%d\trelevance_key_calls=%d"
            % (peer_id, node.stats.messages_handled, node.stats.relevance_key_calls),
            err=True,
        )


@main.command("add-principal")
@click.argument("principal")
@click.option("--role", type=click.Choice([r.value for r in Role]), required=True)
@click.option("--token", envvar="R2P2P_TOKEN", required=True)
@click.pass_context
@reports_errors
def add_principal(ctx, principal, role, token):
    """Add or replace a principal in the node's credential table."""
    cfg = _config(ctx)
    registry = CredentialRegistry.load(cfg.credentials, cfg.digest)
    registry.add(principal, role, token)
    registry.save(cfg.credentials)
    click.echo("%s\t%s" % (principal, role))


if __name__ == "__main__":
    main()
