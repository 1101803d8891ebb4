from datetime import datetime

from fastapi import APIRouter

from app.core.config import settings
from app.repositories.map_repository import get_map_repository

router = APIRouter(tags=["Health Check"])


@router.get(
    "/health",
    summary="Health Check",
    description="Check if the API is running and the bundled maps are readable",
)
async def health_check():
    """
    Simple health check endpoint to verify:
    - API is responding
    - Bundled maps directory is readable
    - Current timestamp
    """
    try:
        maps = get_map_repository().list_map_ids()
        maps_status = "healthy" if maps else "unhealthy: no bundled map"
    except OSError as e:
        maps_status = f"unhealthy: {str(e)}"

    return {
        "status": "healthy" if maps_status == "healthy" else "degraded",
        "timestamp": datetime.now().isoformat(),
        "maps": maps_status,
        "version": settings.APP_VERSION,
    }


@router.get("/", summary="API Root", description="Welcome message and API information")
async def root():
    """
    API root endpoint providing basic information about the Racetrack Lab API.
    """
    return {
        "message": "Welcome to Racetrack Lab API - A* expert and learned agents",
        "version": settings.APP_VERSION,
        "docs": "/docs or /redoc",
        "health": "/health",
    }
