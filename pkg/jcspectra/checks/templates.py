SUMMARY_TEMPLATE = """\
Invariant suite: {{ num_passed }}/{{ num_checks }} checks passed.
{% for report in reports -%}
- [{{ report.status | upper }}] {{ report.check }}: {{ report.detail }}
{% endfor -%}
"""
