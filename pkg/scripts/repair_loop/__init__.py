"""
Repair Loop Package.

This package contains the conversational repair loop and its building blocks:
- pairing: contrastive pair pool construction and selection
- context: traceback deduplication and dependent-function extraction
- prompting: prompt assembly and patch extraction
- llm: chat-completion providers (live and scripted)
- repair: the restart/continuous repair session
"""
