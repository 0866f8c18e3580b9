"""Text templates for model inputs and targets."""
from typing import Optional

from ..exceptions import RenderError
from .sample import InputFormat, Sample

LETTERS = "ABCDE"
NO_CONTEXT = "N/A"


def option_letter(index: int) -> str:
    if not 0 <= index < len(LETTERS):
        raise RenderError(f"No option letter for index {index}")
    return LETTERS[index]


def answer_sentence(answer_index: int) -> str:
    """The canonical answer statement, e.g. 'The answer is (B).'"""
    return f"The answer is ({option_letter(answer_index)})."


def render_input(
    sample: Sample, format: InputFormat, rationale: Optional[str] = None
) -> str:
    """
    Render the language input of a sample.

    Args:
        sample (Sample): The sample.
        format (InputFormat): The format; only QCMR_A takes a rationale.
        rationale (Optional[str]): Rationale to append for QCMR_A. The empty
            string counts as a supplied rationale.

    Returns:
        str: Question, context and options, one per line, followed by the
            rationale line for QCMR_A.
    """
    format = InputFormat(format)
    if format == InputFormat.QCMR_A and rationale is None:
        raise RenderError(
            f"Format {format.value} needs a rationale (sample '{sample.id}')"
        )
    if format != InputFormat.QCMR_A and rationale is not None:
        raise RenderError(
            f"Format {format.value} takes no rationale (sample '{sample.id}')"
        )

    options = " ".join(
        f"({option_letter(i)}) {option}" for i, option in enumerate(sample.options)
    )
    context = sample.context if sample.context != "" else NO_CONTEXT
    text = f"Question: {sample.question}\nContext: {context}\nOptions: {options}\n"
    if format == InputFormat.QCMR_A:
        text += f"Rationale: {rationale}\n"
    return text


def render_target(sample: Sample, format: InputFormat) -> str:
    """
    Render the gold target text of a sample.

    Args:
        sample (Sample): The sample.
        format (InputFormat): The format.

    Returns:
        str: The target text.
    """
    format = InputFormat(format)
    answer = answer_sentence(sample.answer_index)
    if format in (InputFormat.QCM_A, InputFormat.QCMR_A):
        return answer
    elif format == InputFormat.QCM_R:
        return sample.rationale
    elif format == InputFormat.QCM_RA:
        return f"{sample.rationale} {answer}"
    elif format == InputFormat.QCM_AR:
        return f"{answer} {sample.rationale}"
    else:
        raise RenderError(f"Unknown format {format}")
