//! Acceptance suite: one PASS/FAIL line per criterion. Every check compares the
//! engine against an oracle written here, independently of the engine code.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand_core::Rng;
use rand_pcg::Pcg64;
use serde_json::{json, Value};
use topicscope_core::bundle::{save_bundle, Document, TermMatcher};
use topicscope_core::cache::default_cache_path;
use topicscope_core::interpret::{
    document_highlights, document_timeline, group_topic_matrix, topic_importance, NormalizedPhi,
};
use topicscope_core::layout::{layout_wordcloud, FiguresManifest};
use topicscope_core::manifold::{
    fit_ab, fuzzy_simplicial_set, fuzzy_union, knn_graph, smooth_knn, umap_project, Metric,
};
use topicscope_core::{Bundle, UmapParams};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

struct Gen(Pcg64);

impl Gen {
    fn new(seed: u64) -> Self {
        Self(Pcg64::new(
            seed as u128,
            0xa02b_dbf7_bb3c_0a7a_c28f_a16a_64ab_f96d,
        ))
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform in `lo..=hi`.
    fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    fn normal(&mut self) -> f64 {
        let u = 1.0 - self.unit();
        let v = self.unit();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.int(0, items.len() - 1)]
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- formulas

fn formula_oracles() -> Outcome {
    let start = Instant::now();
    let mut g = Gen::new(1);
    for case in 0..100 {
        let (d, n) = (g.int(1, 50), g.int(1, 10));
        // Multiples of 1/64 with integer lengths keep every sum exact in any order.
        let theta = Array2::from_shape_fn((d, n), |_| g.int(0, 64) as f64 / 64.0);
        let lengths: Vec<u64> = (0..d).map(|_| g.int(0, 500) as u64).collect();
        let n_groups = g.int(1, 5);
        let labels: Vec<String> = (0..d)
            .map(|_| format!("g{}", g.int(0, n_groups - 1)))
            .collect();

        let mut s = vec![0.0; n];
        for (doc, &len) in lengths.iter().enumerate() {
            for (t, acc) in s.iter_mut().enumerate() {
                *acc += theta[[doc, t]] * len as f64;
            }
        }
        let got = topic_importance(theta.view(), &lengths).map_err(|e| e.to_string())?;
        ensure(got == s, || {
            format!("case {case}: importance {got:?} != {s:?}")
        })?;

        let mut order: Vec<String> = Vec::new();
        for l in &labels {
            if !order.contains(l) {
                order.push(l.clone());
            }
        }
        let mut oracle = vec![vec![0.0; n]; order.len()];
        for (i, row) in oracle.iter_mut().enumerate() {
            for (k, l) in labels.iter().enumerate() {
                if *l == order[i] {
                    for (j, acc) in row.iter_mut().enumerate() {
                        *acc += theta[[k, j]];
                    }
                }
            }
        }
        let gm = group_topic_matrix(theta.view(), &labels).map_err(|e| e.to_string())?;
        ensure(gm.groups == order && gm.values == oracle, || {
            format!("case {case}: group matrix differs")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "100 instances exact, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

// ---------------------------------------------------------------- smooth_knn

fn smooth_knn_check() -> Outcome {
    let mut g = Gen::new(2);
    let (mut converged, mut clamped) = (0, 0);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let k = g.int(2, 50);
        let scale = 10f64.powf(g.range(-3.0, 2.0));
        let degenerate = case % 10 == 0;
        let mut dist: Vec<f64> = if degenerate {
            // All neighbours tied: the membership sum is k for every σ.
            vec![scale; k]
        } else {
            (0..k).map(|_| g.range(0.0, scale)).collect()
        };
        dist.sort_by(f64::total_cmp);
        let target = (k as f64).log2();
        let r = smooth_knn(&dist, 1, target).map_err(|e| e.to_string())?;
        let rho = dist[0];
        let psum = |sigma: f64| -> f64 {
            dist.iter()
                .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
                .sum()
        };
        let residual = psum(r.sigma) - target;
        let mean = dist.iter().sum::<f64>() / k as f64;
        let floor = (1e-3 * mean).max(f64::EPSILON);
        if r.clamped {
            clamped += 1;
            ensure(r.sigma == floor, || {
                format!("case {case}: clamped σ {} != floor {floor}", r.sigma)
            })?;
            // The clamp is only legitimate when even the floor leaves the sum too large.
            ensure(residual >= -1e-5, || {
                format!("case {case}: clamp with residual {residual}")
            })?;
        } else {
            converged += 1;
            ensure(!degenerate, || {
                format!("case {case}: tied distances not reported as clamped")
            })?;
            ensure(residual.abs() <= 1e-5, || {
                format!("case {case}: residual {residual} (k={k}, scale={scale})")
            })?;
            worst = worst.max(residual.abs());
        }
    }
    Ok(format!(
        "{converged} converged (max |residual| {worst:.2e}), {clamped} clamped"
    ))
}

// ---------------------------------------------------------------- fit_ab

fn curve_sse(a: f64, b: f64, min_dist: f64, spread: f64) -> f64 {
    (1..=300)
        .map(|i| {
            let x = 3.0 * spread * i as f64 / 300.0;
            let target = if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            };
            let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - target;
            r * r
        })
        .sum()
}

/// Nelder–Mead over `(ln a, b)`.
fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: (f64, f64)) -> (f64, f64) {
    let eval = |p: [f64; 2]| f(p[0].exp(), p[1]);
    let mut simplex = [
        [start.0.ln(), start.1],
        [start.0.ln() + 0.5, start.1],
        [start.0.ln(), start.1 + 0.3],
    ];
    for _ in 0..20_000 {
        simplex.sort_by(|p, q| eval(*p).total_cmp(&eval(*q)));
        let [best, mid, worst] = simplex;
        if (eval(worst) - eval(best)).abs() < 1e-18
            && (worst[0] - best[0]).abs() + (worst[1] - best[1]).abs() < 1e-12
        {
            break;
        }
        let c = [(best[0] + mid[0]) / 2.0, (best[1] + mid[1]) / 2.0];
        let at = |t: f64| [c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])];
        let refl = at(-1.0);
        if eval(refl) < eval(best) {
            let exp = at(-2.0);
            simplex[2] = if eval(exp) < eval(refl) { exp } else { refl };
        } else if eval(refl) < eval(mid) {
            simplex[2] = refl;
        } else {
            let con = if eval(refl) < eval(worst) {
                at(-0.5)
            } else {
                at(0.5)
            };
            if eval(con) < eval(worst).min(eval(refl)) {
                simplex[2] = con;
            } else {
                for p in simplex.iter_mut().skip(1) {
                    *p = [(p[0] + best[0]) / 2.0, (p[1] + best[1]) / 2.0];
                }
            }
        }
    }
    simplex.sort_by(|p, q| eval(*p).total_cmp(&eval(*q)));
    (simplex[0][0].exp(), simplex[0][1])
}

fn fit_ab_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for min_dist in [0.01, 0.1, 0.25, 0.5] {
        for spread in [1.0, 1.5] {
            let f = |a: f64, b: f64| curve_sse(a, b, min_dist, spread);
            let oracle = [(1.0, 1.0), (2.0, 0.8), (0.5, 1.2)]
                .into_iter()
                .map(|s| nelder_mead(f, s))
                .min_by(|p, q| f(p.0, p.1).total_cmp(&f(q.0, q.1)))
                .unwrap();
            let (a, b): (f64, f64) = fit_ab(min_dist, spread).map_err(|e| e.to_string())?;
            let err = (a - oracle.0).abs().max((b - oracle.1).abs());
            worst = worst.max(err);
            ensure(err <= 1e-3, || {
                format!(
                    "({min_dist}, {spread}): fit ({a}, {b}) vs oracle ({}, {})",
                    oracle.0, oracle.1
                )
            })?;
        }
    }
    let (a, b): (f64, f64) = fit_ab(0.1, 1.0).map_err(|e| e.to_string())?;
    ensure(
        (a - 1.577).abs() <= 1e-2 && (b - 0.895).abs() <= 1e-2,
        || format!("canonical ({a}, {b})"),
    )?;
    Ok(format!(
        "8 combinations within {worst:.1e} of oracle, canonical a={a:.4} b={b:.4}"
    ))
}

// ---------------------------------------------------------------- projection

fn projection_quality() -> Outcome {
    let mut g = Gen::new(4);
    let (p, dim) = (200, 20);
    let labels: Vec<usize> = (0..p).map(|i| i % 2).collect();
    let x = Array2::from_shape_fn((p, dim), |(i, j)| {
        let center = if labels[i] == 1 && j == 0 { 6.0 } else { 0.0 };
        center + g.normal()
    });
    let start = Instant::now();
    let proj = umap_project(x.view(), &UmapParams::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let c = &proj.coords;
    let d2 = |i: usize, j: usize| (c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2);
    let same = (0..p)
        .filter(|&i| {
            let nn = (0..p)
                .filter(|&j| j != i)
                .min_by(|&a, &b| d2(i, a).total_cmp(&d2(i, b)))
                .unwrap();
            labels[nn] == labels[i]
        })
        .count();
    let rate = same as f64 / p as f64;
    let centroid = |l: usize| {
        let pts: Vec<&[f64; 2]> = (0..p).filter(|&i| labels[i] == l).map(|i| &c[i]).collect();
        let n = pts.len() as f64;
        let m = [
            pts.iter().map(|q| q[0]).sum::<f64>() / n,
            pts.iter().map(|q| q[1]).sum::<f64>() / n,
        ];
        let radius = pts
            .iter()
            .map(|q| ((q[0] - m[0]).powi(2) + (q[1] - m[1]).powi(2)).sqrt())
            .sum::<f64>()
            / n;
        (m, radius)
    };
    let ((m0, r0), (m1, r1)) = (centroid(0), centroid(1));
    let gap = ((m0[0] - m1[0]).powi(2) + (m0[1] - m1[1]).powi(2)).sqrt();
    let detail = format!(
        "nn rate {:.1}%, centroid gap {gap:.2} vs mean radii {r0:.2}+{r1:.2}, {:.2} s",
        rate * 100.0,
        elapsed.as_secs_f64()
    );
    ensure(
        rate >= 0.9 && gap > r0 + r1 && elapsed < Duration::from_secs(10),
        || detail.clone(),
    )?;
    Ok(detail)
}

// ---------------------------------------------------------------- determinism

fn random_bundle(
    g: &mut Gen,
    dir: &Path,
    docs: usize,
    topics: usize,
    terms: usize,
    groups: bool,
) -> Bundle {
    let vocab: Vec<String> = (0..terms).map(|m| format!("term{m}")).collect();
    let documents: Vec<Document> = (0..docs)
        .map(|d| {
            let len = g.int(0, 40);
            let text: Vec<&str> = (0..len).map(|_| g.pick(&vocab).as_str()).collect();
            let doc = Document::new(format!("doc{d}"), text.join(" "));
            if groups {
                doc.with_group(format!("group{}", d % 3))
            } else {
                doc
            }
        })
        .collect();
    let phi = Array2::from_shape_fn(
        (topics, terms),
        |_| if g.unit() < 0.3 { 0.0 } else { g.unit() },
    );
    let theta = Array2::from_shape_fn((docs, topics), |_| g.unit());
    let mut b = Bundle::new(documents, vocab, phi, theta);
    save_bundle(&mut b, dir).expect("bundle saves");
    b
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_topicscope"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bundle = dir.path().join("bundle");
    random_bundle(&mut Gen::new(5), &bundle, 40, 4, 25, true);
    let b = bundle.to_str().unwrap();
    let cache = default_cache_path(&bundle);
    cli(&["compute", b, "--seed", "7"])?;
    let first = std::fs::read(&cache).map_err(|e| e.to_string())?;
    cli(&["compute", b, "--seed", "7"])?;
    let second = std::fs::read(&cache).map_err(|e| e.to_string())?;
    ensure(first == second, || "cache files differ".into())?;

    let (out_a, out_b) = (dir.path().join("fig_a"), dir.path().join("fig_b"));
    cli(&["figures", b, out_a.to_str().unwrap()])?;
    cli(&["figures", b, out_b.to_str().unwrap()])?;
    let manifest: FiguresManifest = serde_json::from_slice(
        &std::fs::read(out_a.join("figures_manifest.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut files: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    files.push("figures_manifest.json".into());
    for f in &files {
        let (x, y) = (std::fs::read(out_a.join(f)), std::fs::read(out_b.join(f)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || {
            format!("{f} differs")
        })?;
    }
    Ok(format!(
        "cache {} bytes identical, {} SVG files identical",
        first.len(),
        files.len() - 1
    ))
}

// ---------------------------------------------------------------- fuzzy graph

fn fuzzy_graph_check() -> Outcome {
    let mut g = Gen::new(6);
    let mut edges_seen = 0;
    for case in 0..100 {
        let n = g.int(2, 40);
        let density = g.range(0.05, 0.6);
        let mut directed = Vec::new();
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && g.unit() < density {
                    let w = 1.0 - g.unit();
                    directed.push((i, j, w));
                    dense[i][j] = w;
                }
            }
        }
        let graph = fuzzy_union(n, &directed).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..n {
                let w = graph.get(i, j);
                ensure(w == graph.get(j, i), || {
                    format!("case {case}: asymmetric at ({i},{j})")
                })?;
                ensure((0.0..=1.0).contains(&w), || {
                    format!("case {case}: weight {w}")
                })?;
                let (a, b) = (dense[i][j], dense[j][i]);
                let oracle = if i == j { 0.0 } else { a + b - a * b };
                ensure((w - oracle).abs() <= 1e-15, || {
                    format!("case {case}: ({i},{j}) {w} vs {oracle}")
                })?;
            }
        }
        edges_seen += graph.n_edges();

        // The same contract through the k-NN pipeline.
        let points = Array2::from_shape_fn((n, 3), |_| g.normal());
        let knn =
            knn_graph(points.view(), g.int(1, 10), Metric::Euclidean).map_err(|e| e.to_string())?;
        let fs = fuzzy_simplicial_set(&knn, 1).map_err(|e| e.to_string())?;
        for (i, j, w) in fs.edges() {
            ensure(fs.get(j, i) == w && w > 0.0 && w <= 1.0, || {
                format!("case {case}: knn edge ({i},{j}) {w}")
            })?;
        }
    }
    Ok(format!(
        "100 random graphs symmetric with weights in [0,1] ({edges_seen} edges)"
    ))
}

// ---------------------------------------------------------------- wordcloud

fn wordcloud_check() -> Outcome {
    let (w, h) = (800.0, 600.0);
    let mut dropped = 0;
    let mut placed = 0;
    for seed in 0..20u64 {
        let mut g = Gen::new(100 + seed);
        let words: Vec<(String, f64)> = (0..300)
            .map(|i| {
                let len = g.int(2, 12);
                let stem: String = (0..len)
                    .map(|_| (b'a' + g.int(0, 25) as u8) as char)
                    .collect();
                (format!("{stem}{i}"), 1.0 - g.unit())
            })
            .collect();
        let layout = layout_wordcloud(&words, w, h, seed).map_err(|e| e.to_string())?;
        let boxes: Vec<[f64; 4]> = layout
            .placements
            .iter()
            .map(|p| [p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1])
            .collect();
        for (i, a) in boxes.iter().enumerate() {
            ensure(a[0] >= 0.0 && a[1] >= 0.0 && a[2] <= w && a[3] <= h, || {
                format!("seed {seed}: box {i} {a:?} outside canvas")
            })?;
            for (j, b) in boxes.iter().enumerate().skip(i + 1) {
                let overlap = a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3];
                ensure(!overlap, || {
                    format!("seed {seed}: boxes {i} and {j} intersect")
                })?;
            }
        }
        placed += boxes.len();
        dropped += layout.dropped.len();
    }
    Ok(format!(
        "20 seeds, {placed} boxes placed without overlap, {dropped} words dropped"
    ))
}

// ---------------------------------------------------------------- highlights and timelines

/// Lowercased ASCII alphanumeric runs.
fn oracle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

fn highlight_timeline_check() -> Outcome {
    let mut g = Gen::new(7);
    let syllables = ["ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi"];
    let separators = [" ", "  ", ", ", ". ", "\n", "-", "; ", " (", ") "];
    let (mut spans_checked, mut windows_checked) = (0, 0);
    for corpus in 0..50 {
        let mut words: BTreeSet<String> = BTreeSet::new();
        while words.len() < 15 {
            let n = g.int(1, 3);
            words.insert((0..n).map(|_| *g.pick(&syllables)).collect());
        }
        let words: Vec<String> = words.into_iter().collect();
        let mut vocab: Vec<String> = words[..12].to_vec();
        for _ in 0..3 {
            let phrase = format!("{} {}", g.pick(&words), g.pick(&words));
            if !vocab.contains(&phrase) {
                vocab.push(phrase);
            }
        }
        let n_topics = g.int(1, 5);
        let phi = Array2::from_shape_fn((n_topics, vocab.len()), |_| {
            if g.unit() < 0.25 {
                0.0
            } else {
                g.unit()
            }
        });
        let matcher = TermMatcher::new(&vocab);
        let phi_hat = NormalizedPhi::new(&phi);
        for _ in 0..5 {
            let len = g.int(0, 80);
            let mut text = String::new();
            for i in 0..len {
                let w = g.pick(&words).clone();
                let w = if g.unit() < 0.2 { w.to_uppercase() } else { w };
                text.push_str(&w);
                if i + 1 < len {
                    text.push_str(g.pick(&separators));
                }
            }
            let occurrences = matcher.find(&text);
            for topic in 0..n_topics {
                let spans = document_highlights(&occurrences, &phi_hat, topic, g.int(1, 10))
                    .map_err(|e| e.to_string())?;
                let mut prev_end = 0;
                for s in &spans {
                    ensure(s.start < s.end && s.end <= text.len(), || {
                        format!("corpus {corpus}: span out of bounds")
                    })?;
                    ensure(
                        text.is_char_boundary(s.start) && text.is_char_boundary(s.end),
                        || format!("corpus {corpus}: span not on a char boundary"),
                    )?;
                    ensure(s.start >= prev_end, || {
                        format!("corpus {corpus}: overlapping spans")
                    })?;
                    prev_end = s.end;
                    let got = oracle_tokens(&text[s.start..s.end]);
                    let want = oracle_tokens(&vocab[s.term_index]);
                    ensure(got == want, || {
                        format!("corpus {corpus}: span {got:?} is not term {want:?}")
                    })?;
                    spans_checked += 1;
                }
            }
            let tokens = matcher.token_terms(&text);
            ensure(tokens.len() == oracle_tokens(&text).len(), || {
                format!("corpus {corpus}: token count")
            })?;
            let (window, stride) = (g.int(1, 30), g.int(1, 30));
            let timeline =
                document_timeline(&tokens, &phi_hat, window, stride).map_err(|e| e.to_string())?;
            for win in &timeline.windows {
                ensure(win.token_end <= tokens.len(), || {
                    format!("corpus {corpus}: window past end")
                })?;
                if !win.empty {
                    let total: f64 = win.distribution.iter().sum();
                    ensure((total - 1.0).abs() <= 1e-9, || {
                        format!("corpus {corpus}: window sums to {total}")
                    })?;
                    windows_checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "50 corpora, {spans_checked} spans re-tokenized, {windows_checked} windows sum to 1"
    ))
}

// ---------------------------------------------------------------- API

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(bundle: &Path) -> Result<Self, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_topicscope"))
            .args([
                "serve",
                bundle.to_str().unwrap(),
                "--port",
                "0",
                "--precompute",
            ])
            .env("TOPICSCOPE_HOST", "127.0.0.1")
            .env_remove("TOPICSCOPE_STATIC_DIR")
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| e.to_string())?;
        let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
        let base = loop {
            match lines.next() {
                Some(Ok(line)) => {
                    if let Some(i) = line.find("http://") {
                        break line[i..].trim().to_string();
                    }
                }
                _ => {
                    let _ = child.kill();
                    return Err("server exited before listening".into());
                }
            }
        };
        std::thread::spawn(move || lines.for_each(drop));
        Ok(Self { child, base })
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn get_json(client: &reqwest::blocking::Client, url: &str) -> Result<Value, String> {
    client
        .get(url)
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.json())
        .map_err(|e| e.to_string())
}

fn names_of(topics: &Value) -> Vec<String> {
    topics
        .as_array()
        .map(|a| {
            a.iter()
                .map(|t| t["name"].as_str().unwrap_or_default().to_string())
                .collect()
        })
        .unwrap_or_default()
}

fn api_round_trip(dashboard: &mut Option<String>) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let n_topics = 4;
    random_bundle(&mut Gen::new(9), dir.path(), 30, n_topics, 20, true);
    let client = reqwest::blocking::Client::new();

    let server = Server::start(dir.path())?;
    let res = client
        .patch(format!("{}/api/topics/1/name", server.base))
        .json(&json!({"name": "sports"}))
        .send()
        .map_err(|e| e.to_string())?;
    ensure(res.status() == 200, || {
        format!("rename returned {}", res.status())
    })?;
    let index = client.get(&server.base).send().map_err(|e| e.to_string())?;
    *dashboard = Some(format!(
        "/ answered {} with the built-in page",
        index.status()
    ));
    drop(server);

    let server = Server::start(dir.path())?;
    let names = names_of(&get_json(&client, &format!("{}/api/topics", server.base))?);
    ensure(names.get(1).map(String::as_str) == Some("sports"), || {
        format!("after restart: {names:?}")
    })?;

    let before = names.clone();
    let requests: Vec<(usize, String)> = (0..100)
        .map(|i| (i % n_topics, format!("storm {i}")))
        .collect();
    let statuses: Vec<u16> = std::thread::scope(|s| {
        let handles: Vec<_> = requests
            .iter()
            .map(|(t, name)| {
                let (client, base) = (&client, &server.base);
                s.spawn(move || {
                    client
                        .patch(format!("{base}/api/topics/{t}/name"))
                        .json(&json!({ "name": name }))
                        .send()
                        .map(|r| r.status().as_u16())
                        .unwrap_or(0)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(0)).collect()
    });
    ensure(statuses.iter().all(|&s| s == 200 || s == 409), || {
        format!("statuses {statuses:?}")
    })?;
    let served = names_of(&get_json(&client, &format!("{}/api/topics", server.base))?);
    let file: Vec<String> = serde_json::from_slice(
        &std::fs::read(dir.path().join("topic_names.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| format!("names file is not valid JSON: {e}"))?;
    ensure(file == served && file.len() == n_topics, || {
        format!("file {file:?} vs served {served:?}")
    })?;
    let mut accepted: HashMap<usize, Vec<&str>> = HashMap::new();
    for ((t, name), &status) in requests.iter().zip(&statuses) {
        if status == 200 {
            accepted.entry(*t).or_default().push(name);
        }
    }
    for (t, name) in file.iter().enumerate() {
        let ok = match accepted.get(&t) {
            Some(names) => names.contains(&name.as_str()),
            None => *name == before[t],
        };
        ensure(ok, || {
            format!("topic {t} ended as {name:?}, not one of its requests")
        })?;
    }
    drop(server);

    let server = Server::start(dir.path())?;
    let after = names_of(&get_json(&client, &format!("{}/api/topics", server.base))?);
    ensure(after == file, || format!("after second restart {after:?}"))?;
    let ok = statuses.iter().filter(|&&s| s == 200).count();
    Ok(format!(
        "rename survives restart; storm of 100 left {file:?} ({ok} accepted)"
    ))
}

fn no_dashboard(dashboard: &Option<String>) -> Outcome {
    ensure(std::env::var_os("TOPICSCOPE_STATIC_DIR").is_none(), || {
        "static dir configured".into()
    })?;
    match dashboard {
        Some(d) if d.contains("200") => Ok(format!("no dashboard assets configured; {d}")),
        Some(d) => Err(d.clone()),
        None => Err("API check did not reach the server".into()),
    }
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>| {
        let outcome = outcome.unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    };
    let checks: [Check; 8] = [
        ("formula oracles", formula_oracles),
        ("smooth_knn calibration", smooth_knn_check),
        ("fit_ab curve", fit_ab_check),
        ("projection quality", projection_quality),
        ("determinism", determinism),
        ("fuzzy graph", fuzzy_graph_check),
        ("wordcloud", wordcloud_check),
        ("highlight and timeline contracts", highlight_timeline_check),
    ];
    for (name, check) in checks {
        report(name, catch_unwind(check));
    }
    let mut dashboard = None;
    report(
        "API round-trip",
        catch_unwind(AssertUnwindSafe(|| api_round_trip(&mut dashboard))),
    );
    report("runs without dashboard", Ok(no_dashboard(&dashboard)));
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
