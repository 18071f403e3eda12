import os

import numpy as np

from bokeh.embed import file_html
from bokeh.layouts import column
from bokeh.models.widgets import Div
from bokeh.plotting import figure
from bokeh.resources import CDN
from colour import Color

from . import structs
from .metrics import field_values, reference_for

css_hack = '''
.dataframe {
  border: 1px solid grey;
  border-collapse: separate;
  border-spacing: 15px 5px;
  white-space: nowrap;
}

h1 {
  font-family: Courier;
  font-size: 18px;
}
'''

def _palette(n, start="steelblue", end="darkorange"):
  if n <= 1:
    return [Color(start).hex_l]
  return [c.hex_l for c in Color(start).range_to(Color(end), n)]

def _table_div(title, df, float_format='%10.4e'):
  if len(df) > 0:
    html_table = df.to_html(border=0, header=True, index=False, justify="left", float_format=lambda x: float_format % x)
  else:
    html_table = '<p>No rows</p>'
  div = Div(text="", width=1000)
  div.text = '''
    <div>
      <h1>{}</h1><br/>
      {}
    </div>
  '''.format(title, html_table)
  return div

def _write(models, filedir, filename, title):
  os.makedirs(filedir, exist_ok=True)
  filepath = os.path.join(filedir, filename)
  html_content = file_html(models=column(*models), resources=CDN, title=title)
  html_content = html_content.replace('<head>', '<head><style class="custom" type="text/css">{}</style>'.format(css_hack))
  with open(filepath, 'w') as outfile:
    outfile.write(html_content)
  return filepath

def plot_convergence(table, slope, filedir='.', filename='convergence.html', column_name="e_r_spacetime"):
  """Log-log chart of the error against h with the study table under it."""
  if "h" not in table or column_name not in table:
    raise structs.ParameterError("convergence table needs columns h and {}, received {}".format(
      column_name, list(table.columns)
    ))
  ok = table[np.isfinite(table[column_name]) & (table[column_name] > 0)]

  p = figure(
    x_axis_type="log",
    y_axis_type="log",
    width=800,
    height=500,
    title="Relative L1 error against mesh size (fitted slope {:.3f})".format(slope),
    tools="pan,wheel_zoom,hover,reset,save",
  )
  colors = _palette(2)
  p.line(ok["h"], ok[column_name], color=colors[0], line_width=2, legend_label=column_name)
  p.scatter(ok["h"], ok[column_name], marker="circle", color=colors[0], size=8)
  if "e_r_final" in ok and column_name != "e_r_final":
    p.line(ok["h"], ok["e_r_final"], color=colors[1], line_width=2, line_dash="dashed", legend_label="e_r_final")
    p.scatter(ok["h"], ok["e_r_final"], marker="square", color=colors[1], size=8)
  p.legend.location = "bottom_right"
  p.grid.grid_line_alpha = 0.3
  p.title.text_font_size = '14pt'

  return _write((p, _table_div("Convergence study:", table)), filedir, filename, "entropynet convergence")

def plot_solution(field, problem, times, filedir='.', filename='solution.html', reference=None, n_points=801):
  """Network profiles u(., t) against the reference at each requested time (1D benchmarks)."""
  if problem.dim != 1:
    raise structs.UnsupportedError("solution profiles are drawn for one-dimensional benchmarks, '{}' has d={}".format(
      problem.name, problem.dim
    ))
  ref_fn, kind = reference_for(problem, reference)
  x = np.linspace(problem.lo[0], problem.hi[0], n_points)

  p = figure(
    width=1000,
    height=500,
    title="{}: network against {} reference".format(problem.name, kind),
    tools="pan,wheel_zoom,crosshair,hover,reset,save",
  )
  colors = _palette(len(times))
  for t, color in zip(times, colors):
    z = np.column_stack([x, np.full(n_points, float(t))])
    p.line(x, field_values(field, z), color=color, line_width=2, legend_label="network t={:g}".format(t))
    p.line(x, np.asarray(ref_fn(z), dtype=float), color=color, line_width=1, line_dash="dotted", legend_label="reference t={:g}".format(t))
  p.legend.location = "top_right"
  p.grid.grid_line_alpha = 0.3
  p.title.text_font_size = '14pt'

  return _write((p,), filedir, filename, "entropynet solution")
