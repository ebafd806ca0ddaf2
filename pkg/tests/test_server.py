"""MCP 서버: 도구 등록과 헬스체크"""

import json
from pathlib import Path

from fastmcp import Client

from src.server import SERVER_NAME, app, health_check, mcp

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


async def test_tools_are_registered():
    async with Client(mcp) as client:
        tools = await client.list_tools()
    assert {tool.name for tool in tools} == {"params", "split", "evaluate", "infer"}


async def test_params_tool_call():
    async with Client(mcp) as client:
        result = await client.call_tool(
            "params", {"config_path": str(CONFIGS / "vit_b_lora.yaml")}
        )
    content = getattr(result, "content", result)
    payload = json.loads(content[0].text)
    assert payload["lora"]["total"] == 442_368


async def test_health_check():
    response = await health_check(None)
    assert json.loads(response.body) == {"status": "healthy", "server": SERVER_NAME}


def test_routes():
    paths = {route.path for route in app.routes}
    assert {"/health", "/mcp"} <= paths
