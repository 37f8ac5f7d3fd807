"""
Tools package for MCP server
"""
