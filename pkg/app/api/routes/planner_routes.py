from typing import List

from fastapi import APIRouter, Depends, HTTPException, Query, status

from app.core.exceptions import UnknownMap, UnsolvableStateError
from app.models.track import Action, State, TrackMap
from app.repositories.map_repository import MapRepository, get_map_repository
from app.schemas.planner_dto import ClassificationResponse, PlanResponse
from app.schemas.track_dto import FeatureVectorOut, MapInfo
from app.services.planner_service import PlannerService, get_planner
from app.services.track_service import FEATURE_NAMES, encode_features

router = APIRouter(prefix="/maps", tags=["Planner"])


def get_track_map(
    map_id: str, repository: MapRepository = Depends(get_map_repository)
) -> TrackMap:
    """Dependency: carte embarquée par identifiant"""
    try:
        return repository.get(map_id)
    except UnknownMap:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Unknown map: {map_id}")


def get_planner_service(track_map: TrackMap = Depends(get_track_map)) -> PlannerService:
    return get_planner(track_map)


def get_state(
    track_map: TrackMap = Depends(get_track_map),
    x: int = Query(..., description="Column (0 = left)"),
    y: int = Query(..., description="Row (0 = top)"),
    vx: int = Query(0),
    vy: int = Query(0),
) -> State:
    if track_map.is_blocked(x, y):
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=f"({x}, {y}) is not a traversable cell of {track_map.map_id}",
        )
    return State(x, y, vx, vy)


def _map_info(track_map: TrackMap) -> MapInfo:
    return MapInfo(
        map_id=track_map.map_id,
        width=track_map.width,
        height=track_map.height,
        start_cells=len(track_map.start_cells),
        goal_cells=len(track_map.goal_cells),
        traversable_cells=len(track_map.traversable_cells),
        content_hash=track_map.content_hash,
    )


@router.get("", response_model=List[MapInfo])
async def list_maps(repository: MapRepository = Depends(get_map_repository)):
    """List the bundled maps"""
    return [_map_info(repository.get(map_id)) for map_id in repository.list_map_ids()]


@router.get("/{map_id}", response_model=MapInfo)
async def get_map(track_map: TrackMap = Depends(get_track_map)):
    return _map_info(track_map)


@router.get("/{map_id}/plan", response_model=PlanResponse)
def plan(
    track_map: TrackMap = Depends(get_track_map),
    state: State = Depends(get_state),
    planner: PlannerService = Depends(get_planner_service),
):
    """Optimal plan (length, optimal first actions, witness) under deterministic dynamics"""
    result = planner.astar(state)
    return PlanResponse(
        map_id=track_map.map_id, state=tuple(state), solvable=result is not None, plan=result
    )


@router.get("/{map_id}/classify", response_model=ClassificationResponse)
def classify(
    track_map: TrackMap = Depends(get_track_map),
    state: State = Depends(get_state),
    planner: PlannerService = Depends(get_planner_service),
    ax: int = Query(..., ge=-1, le=1),
    ay: int = Query(..., ge=-1, le=1),
):
    """Classify an action as optimal, secure or fatal"""
    try:
        quality = planner.classify_action(state, Action(ax, ay))
    except UnsolvableStateError as e:
        raise HTTPException(status_code=status.HTTP_409_CONFLICT, detail=str(e))
    return ClassificationResponse(
        map_id=track_map.map_id, state=tuple(state), action=(ax, ay), quality=quality
    )


@router.get("/{map_id}/features", response_model=FeatureVectorOut)
async def features(
    track_map: TrackMap = Depends(get_track_map), state: State = Depends(get_state)
):
    """The 15-feature encoding of a state"""
    return FeatureVectorOut(names=FEATURE_NAMES, values=list(encode_features(track_map, state)))
