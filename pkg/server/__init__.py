"""
MCP Server package
"""
