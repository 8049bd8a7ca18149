//! Conic Benchmark Format (CBF, version 3) writer.
//!
//! Layout of the dump:
//!
//! * one free scalar variable block `F n`;
//! * scalar constraint rows in the order equalities (`L=`), nonnegative
//!   rows (`L+`), then one `QR` block per rotated quadratic cone;
//! * one `PSDCON` per semidefinite block, affine in the scalar variables.
//!
//! CBF's `QR` cone is `2 x₁ x₂ ≥ Σ_{k≥3} x_k²`, so the first coordinate of each
//! rotated block is written as `u/2` to express `u·v ≥ |w|²`.

use std::fmt::Write as _;

use super::{ConicProgram, LinExpr};

struct Acc {
    a: Vec<(usize, usize, f64)>,
    b: Vec<(usize, f64)>,
    rows: usize,
}

impl Acc {
    fn push(&mut self, e: &LinExpr, scale: f64) {
        let e = e.normalized();
        for &(v, c) in e.raw_terms() {
            self.a.push((self.rows, v, c * scale));
        }
        if e.constant_part() != 0.0 {
            self.b.push((self.rows, e.constant_part() * scale));
        }
        self.rows += 1;
    }
}

/// Serializes `prog` as CBF text.
pub fn write_cbf(prog: &ConicProgram) -> String {
    let mut out = String::new();
    let mut acc = Acc {
        a: Vec::new(),
        b: Vec::new(),
        rows: 0,
    };
    let mut blocks: Vec<(String, usize)> = Vec::new();
    for e in &prog.equalities {
        acc.push(e, 1.0);
    }
    if !prog.equalities.is_empty() {
        blocks.push(("L=".into(), prog.equalities.len()));
    }
    for (e, _) in &prog.nonneg {
        acc.push(e, 1.0);
    }
    if !prog.nonneg.is_empty() {
        blocks.push(("L+".into(), prog.nonneg.len()));
    }
    for q in &prog.rotated {
        acc.push(&q.u, 0.5);
        acc.push(&q.v, 1.0);
        for w in &q.w {
            acc.push(w, 1.0);
        }
        blocks.push(("QR".into(), 2 + q.w.len()));
    }

    let _ = writeln!(out, "VER\n3\n");
    let _ = writeln!(out, "OBJSENSE\nMIN\n");
    let _ = writeln!(out, "VAR\n{} 1\nF {}\n", prog.num_vars(), prog.num_vars());
    if !prog.psd.is_empty() {
        let _ = writeln!(out, "PSDCON\n{}", prog.psd.len());
        for m in &prog.psd {
            let _ = writeln!(out, "{}", m.dim());
        }
        let _ = writeln!(out);
    }
    if acc.rows > 0 {
        let _ = writeln!(out, "CON\n{} {}", acc.rows, blocks.len());
        for (k, s) in &blocks {
            let _ = writeln!(out, "{k} {s}");
        }
        let _ = writeln!(out);
    }

    let obj = prog.objective().normalized();
    if !obj.raw_terms().is_empty() {
        let _ = writeln!(out, "OBJACOORD\n{}", obj.raw_terms().len());
        for &(v, c) in obj.raw_terms() {
            let _ = writeln!(out, "{v} {c:e}");
        }
        let _ = writeln!(out);
    }
    if obj.constant_part() != 0.0 {
        let _ = writeln!(out, "OBJBCOORD\n{:e}\n", obj.constant_part());
    }

    let mut h = Vec::new();
    let mut d = Vec::new();
    for (p, m) in prog.psd.iter().enumerate() {
        for i in 0..m.dim() {
            for j in 0..=i {
                let e = m.get(i, j).normalized();
                for &(v, c) in e.raw_terms() {
                    h.push(format!("{p} {v} {i} {j} {c:e}"));
                }
                if e.constant_part() != 0.0 {
                    d.push(format!("{p} {i} {j} {:e}", e.constant_part()));
                }
            }
        }
    }
    if !h.is_empty() {
        let _ = writeln!(out, "HCOORD\n{}\n{}\n", h.len(), h.join("\n"));
    }
    if !d.is_empty() {
        let _ = writeln!(out, "DCOORD\n{}\n{}\n", d.len(), d.join("\n"));
    }
    if !acc.a.is_empty() {
        let _ = writeln!(out, "ACOORD\n{}", acc.a.len());
        for (r, v, c) in &acc.a {
            let _ = writeln!(out, "{r} {v} {c:e}");
        }
        let _ = writeln!(out);
    }
    if !acc.b.is_empty() {
        let _ = writeln!(out, "BCOORD\n{}", acc.b.len());
        for (r, c) in &acc.b {
            let _ = writeln!(out, "{r} {c:e}");
        }
        let _ = writeln!(out);
    }
    out
}
