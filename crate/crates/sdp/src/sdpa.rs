use std::fmt::Write;

use crate::problem::SdpProblem;

/// Writes `p` in sparse SDPA format.
///
/// SDPA expects `Σ Fᵢxᵢ − F₀ ⪰ 0`, so the constant matrices are negated.
/// Equalities become one diagonal LP block holding `aᵀy − b ≥ 0` and
/// `b − aᵀy ≥ 0` for every row.
pub fn to_sdpa(p: &SdpProblem) -> String {
    let mut out = String::new();
    let m = p.equalities().len();
    let n_blocks = p.blocks().len() + usize::from(m > 0);
    let _ = writeln!(out, "\"exported by lasserre-sdp");
    let _ = writeln!(out, "{}", p.n_vars());
    let _ = writeln!(out, "{}", n_blocks);
    let mut sizes: Vec<String> = p.blocks().iter().map(|b| b.side().to_string()).collect();
    if m > 0 {
        sizes.push(format!("-{}", 2 * m));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = p.objective().iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    for (bi, block) in p.blocks().iter().enumerate() {
        let blk = bi + 1;
        for &(r, col, v) in block.constant().upper() {
            if v != 0.0 {
                let _ = writeln!(out, "0 {} {} {} {:e}", blk, r + 1, col + 1, -v);
            }
        }
        for (i, f) in block.coefficients() {
            for &(r, col, v) in f.upper() {
                if v != 0.0 {
                    let _ = writeln!(out, "{} {} {} {} {:e}", i + 1, blk, r + 1, col + 1, v);
                }
            }
        }
    }
    if m > 0 {
        let blk = p.blocks().len() + 1;
        for (r, (row, &b)) in p.equalities().iter().zip(p.rhs()).enumerate() {
            let (d1, d2) = (2 * r + 1, 2 * r + 2);
            if b != 0.0 {
                let _ = writeln!(out, "0 {blk} {d1} {d1} {:e}", b);
                let _ = writeln!(out, "0 {blk} {d2} {d2} {:e}", -b);
            }
            for &(i, a) in row {
                let _ = writeln!(out, "{} {blk} {d1} {d1} {:e}", i + 1, a);
                let _ = writeln!(out, "{} {blk} {d2} {d2} {:e}", i + 1, -a);
            }
        }
    }
    out
}
