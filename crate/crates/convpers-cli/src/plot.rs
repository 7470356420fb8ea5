//! Dependency-free SVG scatter plots of persistence diagrams: axes, the
//! diagonal, one circle per finite point colored by homology dimension, and
//! triangles on a dashed top line for essential classes.

use convpers::persistence::PersistenceDiagram;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn diagram_svg(diagram: &PersistenceDiagram) -> String {
    let finite_max = diagram
        .points()
        .iter()
        .flat_map(|p| {
            let death = if p.death.is_finite() {
                p.death
            } else {
                p.birth
            };
            [p.birth, death]
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let finite_min = diagram
        .points()
        .iter()
        .map(|p| p.birth)
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = if diagram.is_empty() || finite_min >= finite_max {
        (0.0, 1.0)
    } else {
        let pad = 0.05 * (finite_max - finite_min);
        (finite_min - pad, finite_max + pad)
    };
    let span = hi - lo;
    let plot = SIZE - 2.0 * MARGIN;
    let x = |v: f64| MARGIN + (v - lo) / span * plot;
    let y = |v: f64| SIZE - MARGIN - (v - lo) / span * plot;
    let inf_y = MARGIN * 0.6;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = SIZE - MARGIN,
        r = SIZE - MARGIN
    ));
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{m}\" y2=\"{t}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = SIZE - MARGIN,
        t = MARGIN
    ));
    // Diagonal birth = death.
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{t}\" stroke=\"#999999\"/>\n",
        m = MARGIN,
        b = SIZE - MARGIN,
        r = SIZE - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\">birth</text>\n",
        SIZE / 2.0 - 14.0,
        SIZE - MARGIN / 3.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 {x} {y})\">death</text>\n",
        MARGIN / 3.0,
        SIZE / 2.0,
        x = MARGIN / 3.0,
        y = SIZE / 2.0
    ));

    let has_essential = diagram.points().iter().any(|p| !p.death.is_finite());
    if has_essential {
        svg.push_str(&format!(
            "  <line x1=\"{m}\" y1=\"{iy}\" x2=\"{r}\" y2=\"{iy}\" stroke=\"#999999\" \
             stroke-dasharray=\"4 3\"/>\n  <text x=\"{lx}\" y=\"{ty}\" font-size=\"12\">inf</text>\n",
            m = MARGIN,
            iy = inf_y,
            r = SIZE - MARGIN,
            lx = SIZE - MARGIN + 6.0,
            ty = inf_y + 4.0
        ));
    }

    for p in diagram.points() {
        let color = PALETTE[p.dim % PALETTE.len()];
        if p.death.is_finite() {
            svg.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\" \
                 fill-opacity=\"0.8\"/>\n",
                x(p.birth),
                y(p.death)
            ));
        } else {
            let cx = x(p.birth);
            svg.push_str(&format!(
                "  <path d=\"M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z\" fill=\"{color}\"/>\n",
                cx,
                inf_y - 5.0,
                cx - 5.0,
                inf_y + 4.0,
                cx + 5.0,
                inf_y + 4.0
            ));
        }
    }
    // Legend: one swatch per dimension present.
    let mut dims: Vec<usize> = diagram.points().iter().map(|p| p.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    for (row, dim) in dims.iter().enumerate() {
        let ly = MARGIN + 14.0 * row as f64;
        svg.push_str(&format!(
            "  <rect x=\"{lx}\" y=\"{ry}\" width=\"9\" height=\"9\" fill=\"{color}\"/>\n  \
             <text x=\"{tx}\" y=\"{ty}\" font-size=\"11\">H{dim}</text>\n",
            lx = SIZE - MARGIN - 52.0,
            ry = ly - 8.0,
            color = PALETTE[dim % PALETTE.len()],
            tx = SIZE - MARGIN - 39.0,
            ty = ly
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
