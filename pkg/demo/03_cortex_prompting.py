"""Building the reasoning prompt and parsing what comes back.

The prompt asks for three labeled fields; the parser is deliberately
forgiving about formatting because model output drifts.
"""

from gvqa_pipeline import build_cortex_prompt, parse_cortex_response, validate_trigger

prompt = build_cortex_prompt("Track the letters that the person puts on the table.")
rendered = prompt.render()
print("--- prompt head ---")
print("\n".join(rendered.splitlines()[:6]))
print(f"... ({len(rendered.splitlines())} lines total, {len(prompt.few_shots)} few-shot examples)\n")

# A messy-but-parseable answer:
raw = """Sure, here's what I found:
```
Answer: the magnetic plastic letters
Reasoning: Step 1: the person slides them across the fridge, so they are
the interacted objects. Step 2: at frame 48 all three letters are still
and unoccluded.
Trigger_moment: 48
```"""
parsed = parse_cortex_response(raw)
print("answer:        ", parsed.answer)
print("trigger_moment:", parsed.trigger_moment)
print("is_ocr_case:   ", parsed.is_ocr_case, "(text objects stay described by medium, never spelled out)")

# Out-of-range triggers are clamped, not rejected; the fallback chain in
# the grounding search recovers from a bad anchor anyway.
clamped, was_clamped = validate_trigger(parsed, sampled_len=30)
print(f"trigger after clamping to a 30-frame sampled sequence: {clamped.trigger_moment} (clamped={was_clamped})")

try:
    parse_cortex_response("Answer: the cup\nReasoning: fine\nTrigger_moment: soonish")
except ValueError as exc:
    print("malformed trigger ->", exc)
