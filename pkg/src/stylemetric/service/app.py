"""HTTP facade over the scoring library.

Every endpoint wraps one operation from stylemetric.ops; library errors
surface as HTTP 400 with a single-line error body.
"""

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, ops
from ..errors import StylemetricError
from . import schemas
from .state import IndexCache


def create_app():
    app = FastAPI(title="stylemetric", version=__version__)
    cache = IndexCache()

    @app.exception_handler(StylemetricError)
    async def _library_error(_request, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post(
        "/build-index",
        response_model=schemas.BuildIndexResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def build_index(req: schemas.BuildIndexRequest):
        return ops.build_index_report(req.dataset, req.out, split=req.split)

    @app.post(
        "/score",
        response_model=schemas.ScoreResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def score(req: schemas.ScoreRequest):
        index = cache.get(req.index)
        return ops.score_report(
            index,
            req.metric,
            req.input,
            refs_path=req.refs,
            style=req.style,
            threads=req.threads,
            index_path=req.index,
        )

    @app.post(
        "/eval-gt",
        response_model=schemas.EvalGtResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def eval_gt(req: schemas.EvalGtRequest):
        index = cache.get(req.index)
        return ops.eval_gt_report(
            index,
            req.dataset,
            split=req.split,
            mode=req.mode,
            comparison=req.comparison,
            k=req.k,
            seed=req.seed,
            threads=req.threads,
            index_path=req.index,
        )

    @app.post(
        "/eval-models",
        response_model=schemas.EvalModelsResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def eval_models(req: schemas.EvalModelsRequest):
        index = cache.get(req.index)
        return ops.eval_models_report(index, req.generations, req.references, threads=req.threads, index_path=req.index)

    @app.post(
        "/rank",
        response_model=schemas.RankResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def rank(req: schemas.RankRequest):
        index = cache.get(req.index)
        return ops.rank_report(index, req.caption, target=req.target, top=req.top, index_path=req.index)

    @app.post(
        "/cng",
        response_model=schemas.CngResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def cng(req: schemas.CngRequest):
        index = cache.get(req.index)
        return ops.cng_report(index, req.terms, styles=req.styles, index_path=req.index)

    @app.post(
        "/corr",
        response_model=schemas.CorrResponse,
        responses={400: {"model": schemas.ErrorResponse}},
    )
    def corr(req: schemas.CorrRequest):
        return ops.corr_report(req.scores, req.ranks)

    return app
