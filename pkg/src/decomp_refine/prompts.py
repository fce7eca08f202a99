"""Prompt templates.

Placeholders are substituted with ``str.replace`` so C braces in templates or
snippets never need escaping.
"""

from __future__ import annotations

from dataclasses import dataclass

RATIONALE_CONCISE = """\
Instruction: You are an expert C code analyst.
Task: Read the following C function and generate a standard multi-line header comment (/* ... */) for it.
Source Code: {code_snippet}
Requirements:
1. Output ONLY the comment block. Do not output the source code.
2. The comment must start with /* and end with */.
3. Content:
   - Function: [Name]
   - Purpose: [Concise description]
CRITICAL LOGIC CHECK (Must Follow):
- Loop Analysis: Check how the inner loop initializes. If the inner loop index initializes using the outer loop's index (e.g., inner = outer or inner = outer + 1), explicitly describe it as comparing "all pairs" or "combinations". STRICTLY FORBID the word "adjacent" unless the code strictly checks i vs i+1.
- Bitwise Magic: If you see a float being cast to int/uint and AND-ed (&) with a constant (like 0x7FFFFFFF) OR a global data label (e.g., DAT_..., PTR_...), treat this as calculating the "absolute value" (fabs).
"""

RATIONALE_DETAILED = RATIONALE_CONCISE.replace(
    "   - Purpose: [Concise description]\n",
    "   - Purpose: [Concise description]\n"
    "   - Inputs: [Each parameter and its role]\n"
    "   - Outputs: [Return value and side effects]\n"
    "   - Implicit Operations: [Hidden computations such as casts, bit tricks or pointer arithmetic]\n",
)

REFINE_INSTRUCTION = (
    "Refine the following decompiler pseudo-code into clean, compilable C source code "
    "that preserves its behavior. Output only the C function."
)

# Alpaca layout; the same text is used for training records and inference.
REFINE_WITH_RATIONALE = """\
### Instruction:
{instruction}

### Input:
{rationale}
{code_snippet}

### Response:
"""

REFINE_PLAIN = """\
### Instruction:
{instruction}

### Input:
{code_snippet}

### Response:
"""


def fill(template: str, **values: str) -> str:
    out = template
    for key, val in values.items():
        out = out.replace("{" + key + "}", val)
    return out


@dataclass
class PromptTemplates:
    rationale_concise: str = RATIONALE_CONCISE
    rationale_detailed: str = RATIONALE_DETAILED
    refine_with_rationale: str = REFINE_WITH_RATIONALE
    refine_plain: str = REFINE_PLAIN
    instruction: str = REFINE_INSTRUCTION

    _REQUIRED = {
        "rationale_concise": ("{code_snippet}",),
        "rationale_detailed": ("{code_snippet}",),
        "refine_with_rationale": ("{code_snippet}", "{rationale}"),
        "refine_plain": ("{code_snippet}",),
    }

    def __post_init__(self) -> None:
        for name, needed in self._REQUIRED.items():
            text = getattr(self, name)
            for ph in needed:
                if ph not in text:
                    raise ValueError(f"template {name} lacks placeholder {ph}")


DEFAULT_TEMPLATES = PromptTemplates()
