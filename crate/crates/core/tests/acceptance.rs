//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use prosody_core::augment::{
    annotations_from_labels, augment_transcript, parse_augmented, phonemize, OovPolicy, Token, Transcript,
};
use prosody_core::corpus::{batch_annotate, batch_evaluate, CorpusIndex};
use prosody_core::eval::stats::{bonferroni, one_way_anova};
use prosody_core::eval::{dtw_align, label_report, pearson, rmse, series_metrics, ClassReport, FeatureMatrix, Metric};
use prosody_core::fixtures::{generate, lexicon, write_corpus, FixtureOptions, Role};
use prosody_core::ingest::Lexicon;
use prosody_core::labeler::{annotate_utterance, UtteranceAnnotation};
use prosody_core::signals::{znorm, ProsodicSignal, SignalKind};
use prosody_core::wavelet::cwt;
use prosody_core::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{name}: got {got}, want {want} (tol {tol})"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn fixture_labels() -> Outcome {
    let cfg = Config::default();
    let t = Instant::now();
    let corpus = generate(&FixtureOptions::default()).map_err(e)?;
    let (mut p_win, mut p_n, mut b_win, mut b_n, mut emph2, mut emph) = (0, 0, 0, 0, 0, 0);
    for u in &corpus {
        let ann = annotate_utterance(&u.audio, &u.alignment, &cfg).map_err(e)?;
        for (a, d) in ann.iter().zip(&u.design.words) {
            if d.role == Role::Emphasized {
                emph += 1;
                emph2 += usize::from(a.p_class == 2);
            }
        }
        for (hi, lo) in u.design.prominence_pairs() {
            p_n += 1;
            p_win += usize::from(ann[hi].prominence > ann[lo].prominence);
        }
        for (pause, joint) in u.design.boundary_pairs() {
            b_n += 1;
            b_win += usize::from(ann[pause].boundary > ann[joint].boundary);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let frac = |a: usize, n: usize| a as f64 / n.max(1) as f64;
    let detail = format!(
        "{} utterances; prominence pairs {p_win}/{p_n}; boundary pairs {b_win}/{b_n}; emphasized p2 {emph2}/{emph}; {secs:.1} s",
        corpus.len()
    );
    ensure(corpus.len() == 20, format!("expected 20 utterances: {detail}"))?;
    ensure(p_n > 0 && frac(p_win, p_n) >= 0.9, format!("prominence ordering < 90%: {detail}"))?;
    ensure(b_n > 0 && frac(b_win, b_n) >= 0.9, format!("boundary ordering < 90%: {detail}"))?;
    ensure(emph > 0 && frac(emph2, emph) >= 0.8, format!("emphasized p2 < 80%: {detail}"))?;
    ensure(secs < 60.0, format!("too slow: {detail}"))?;
    Ok(detail)
}

/// Minimum over every monotone path, summed in path order like the dynamic program.
fn exhaustive(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
    let acc = acc + (a[i] - b[j]).abs();
    if i + 1 == a.len() && j + 1 == b.len() {
        *best = best.min(acc);
        return;
    }
    if i + 1 < a.len() && j + 1 < b.len() {
        exhaustive(a, b, i + 1, j + 1, acc, best);
    }
    if i + 1 < a.len() {
        exhaustive(a, b, i + 1, j, acc, best);
    }
    if j + 1 < b.len() {
        exhaustive(a, b, i, j + 1, acc, best);
    }
}

fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let matrix = |v: &[f64]| FeatureMatrix::from_scalars(v).map_err(e);
    for case in 0..200 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (_, cost) = dtw_align(&matrix(&a)?, &matrix(&b)?).map_err(e)?;
        let mut best = f64::INFINITY;
        exhaustive(&a, &b, 0, 0, 0.0, &mut best);
        ensure(cost == best, format!("case {case}: dtw {cost} vs exhaustive {best}"))?;
    }
    Ok("200/200 random pairs (lengths 1..=8) match exactly".into())
}

fn closed_form() -> Outcome {
    const TOL: f64 = 1e-6;
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).ok_or("pearson undefined")?;
    close("pearson", r, 0.8, TOL)?;

    // Two compared pairs and one masked out. The metric itself needs three
    // compared pairs, so the arithmetic is checked on the masked selection.
    let pairs = [(0.0, 3.0), (0.0, 4.0), (9.0, -9.0)];
    let mask = [true, true, false];
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().zip(mask).filter(|(_, m)| *m).map(|(p, _)| *p).unzip();
    close("rmse", rmse(&x, &y), 12.5f64.sqrt(), TOL)?;
    ensure(series_metrics(&pairs, &mask).is_err(), "series_metrics accepted 2 compared pairs")?;

    let z = znorm(&ProsodicSignal::new(vec![1.0, 2.0, 3.0], 0.005, SignalKind::Combined).map_err(e)?);
    let want = 1.5f64.sqrt();
    for (g, w) in z.values().iter().zip([-want, 0.0, want]) {
        close("znorm", *g, w, TOL)?;
    }

    let an = one_way_anova(&[&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], &[3.0, 4.0, 5.0]]).map_err(e)?;
    close("anova F", an.f, 3.0, TOL)?;
    close("anova p", an.p, 0.125, TOL)?;
    close("bonferroni", bonferroni(0.01, 5), 0.05, TOL)?;
    Ok(format!(
        "pearson {r:.9}; rmse {:.9}; znorm {:?}; F {:.9} p {:.9}; bonferroni {:.9}",
        rmse(&x, &y),
        z.values(),
        an.f,
        an.p,
        bonferroni(0.01, 5)
    ))
}

fn cwt_properties() -> Outcome {
    let fps = 200.0;
    let bank = Config::default().wavelet.bank().map_err(e)?;
    let signal = |v: Vec<f64>| ProsodicSignal::new(v, 1.0 / fps, SignalKind::Combined).map_err(e);
    let mut peaks = Vec::new();
    for freq in [0.5, 1.0, 2.0, 4.0] {
        let s = signal((0..2400).map(|i| (2.0 * PI * freq * i as f64 / fps).cos()).collect())?;
        let sc = cwt(&s, &bank).map_err(e)?;
        let power: Vec<f64> = sc.rows().iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).collect();
        let k = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
        let period = bank.periods()[k];
        let octaves = (period * freq).log2().abs();
        ensure(octaves <= 0.5, format!("{freq} Hz peaked at {period} s ({octaves:.2} octaves off)"))?;
        peaks.push(format!("{freq} Hz -> {period:.3} s"));
    }

    let zero = cwt(&signal(vec![0.0; 500])?, &bank).map_err(e)?;
    ensure(zero.rows().iter().flatten().all(|&v| v == 0.0), "zero signal gave a non-zero coefficient")?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(50..600);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (a, b) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (cx, cy, cm) = (
            cwt(&signal(x)?, &bank).map_err(e)?,
            cwt(&signal(y)?, &bank).map_err(e)?,
            cwt(&signal(mix)?, &bank).map_err(e)?,
        );
        for k in 0..bank.len() {
            for ((p, q), m) in cx.row(k).iter().zip(cy.row(k)).zip(cm.row(k)) {
                worst = worst.max((a * p + b * q - m).abs());
            }
        }
    }
    ensure(worst <= 1e-9, format!("linearity error {worst:e}"))?;
    Ok(format!("{}; zero in, zero out; linearity error {worst:.1e}", peaks.join(", ")))
}

fn fixture_dir() -> Result<(tempfile::TempDir, CorpusIndex), String> {
    let dir = tempfile::tempdir().map_err(e)?;
    write_corpus(dir.path(), &generate(&FixtureOptions::default()).map_err(e)?).map_err(e)?;
    let index = CorpusIndex::from_dir(dir.path()).map_err(e)?;
    Ok((dir, index))
}

fn determinism(index: &CorpusIndex) -> Outcome {
    let cfg = Config::default();
    let one = batch_annotate(index, &cfg, 1).map_err(e)?;
    let eight = batch_annotate(index, &cfg, 8).map_err(e)?;
    ensure(one.is_complete() && eight.is_complete(), "annotation failures")?;
    let (a, b) = (one.to_jsonl(), eight.to_jsonl());
    ensure(a.as_bytes() == b.as_bytes(), "parallelism 1 and 8 differ")?;

    let entry = &index.entries()[0];
    let (audio, alignment) = (entry.load_audio().map_err(e)?, entry.load_alignment().map_err(e)?);
    let first = annotate_utterance(&audio, &alignment, &cfg).map_err(e)?;
    let second = annotate_utterance(&audio, &alignment, &cfg).map_err(e)?;
    ensure(first == second, "repeated annotation differs")?;
    Ok(format!("{} bytes of JSONL identical at parallelism 1 and 8; repeat annotation identical", a.len()))
}

fn self_evaluation(index: &CorpusIndex) -> Outcome {
    const TOL: f64 = 1e-9;
    let report = batch_evaluate(index, &[("self".into(), index.clone())], &Config::default(), 4).map_err(e)?;
    ensure(report.per_utterance.len() == index.len(), format!("{} of {} rows", report.per_utterance.len(), index.len()))?;
    for row in &report.per_utterance {
        for metric in Metric::ALL {
            let m = row.get(metric).ok_or_else(|| format!("{} {}: missing ({:?})", row.id, metric.name(), row.notes))?;
            let r = m.correlation.ok_or_else(|| format!("{} {}: correlation undefined", row.id, metric.name()))?;
            close(&format!("{} {} rmse", row.id, metric.name()), m.rmse, 0.0, TOL)?;
            close(&format!("{} {} corr", row.id, metric.name()), r, 1.0, TOL)?;
        }
    }
    Ok(format!("{} utterances x 4 metrics: rmse 0, correlation 1 (tol {TOL:e})", report.per_utterance.len()))
}

fn random_transcript(rng: &mut ChaCha8Rng, vocab: &[String]) -> (Transcript, Vec<[u8; 2]>) {
    let oov = ["zzqx", "qat", "xyzzy"];
    let n = rng.gen_range(1..12);
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let k = rng.gen_range(0..vocab.len() + oov.len());
        let word = vocab.get(k).cloned().unwrap_or_else(|| oov[k - vocab.len()].to_string());
        tokens.push(Token::Word(word));
        if rng.gen_bool(0.3) {
            tokens.push(Token::Punct([',', '.', '!', '?'][rng.gen_range(0..4)]));
        }
        labels.push([rng.gen_range(0..3), rng.gen_range(0..3)]);
    }
    (Transcript::new("r", tokens).expect("valid tokens"), labels)
}

fn augmentation() -> Outcome {
    let lex = Lexicon::parse("I  AY1\nINSIST  IH2 N S IH1 S T\nTHAT  DH AE1 T\nTHAT(2)  DH AH0 T\n").map_err(e)?;
    let t = Transcript::from_text("u", "I insist, that");
    let ann = annotations_from_labels(t.words(), &[[1, 0], [2, 2], [0, 0]]);
    let s = augment_transcript(&t, &ann, &lex, OovPolicy::Error).map_err(e)?.to_string();
    let quoted = "<p1> ay1 <b0> <p2> ih2 n s ih1 s t , <b2> <p0> dh ae1 t";
    ensure(s == format!("{quoted} <b0>"), format!("fragment rendered as {s:?}"))?;

    let lex = lexicon();
    let vocab: Vec<String> = lex.words().map(str::to_lowercase).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let (t, labels) = random_transcript(&mut rng, &vocab);
        let ann = annotations_from_labels(t.words(), &labels);
        let aug = augment_transcript(&t, &ann, &lex, OovPolicy::Graphemes).map_err(e)?;
        let text = aug.to_string();
        let back = parse_augmented(&text).map_err(|err| format!("case {case}: {err}"))?;
        ensure(back == aug, format!("case {case}: round trip changed {text:?}"))?;
        for ((w, punct), (bw, l)) in t.words_with_punct().iter().zip(back.words().iter().zip(&labels)) {
            let phones = phonemize(w, &lex, OovPolicy::Graphemes).map_err(e)?;
            ensure(
                bw.phones == phones && bw.punct == *punct && [bw.p_class, bw.b_class] == *l,
                format!("case {case}: word {w:?} did not survive"),
            )?;
        }
    }
    Ok("fragment matches plus final <b0>; 1000/1000 random round trips".into())
}

fn label_reports(index: &CorpusIndex) -> Outcome {
    let o = [0, 0, 1, 1, 2, 2];
    let p = [0, 0, 1, 0, 2, 1];
    let r = ClassReport::from_pairs(o.into_iter().zip(p)).map_err(e)?;
    ensure(r.confusion == [[2, 0, 0], [1, 1, 0], [0, 1, 1]], format!("confusion {:?}", r.confusion))?;
    close("accuracy", r.accuracy, 4.0 / 6.0, 1e-12)?;
    let want = [(2.0 / 3.0, 1.0, 0.8), (0.5, 0.5, 0.5), (1.0, 0.5, 2.0 / 3.0)];
    for (k, (c, (wp, wr, wf))) in r.classes.iter().zip(want).enumerate() {
        close(&format!("class {k} precision"), c.precision, wp, 1e-12)?;
        close(&format!("class {k} recall"), c.recall, wr, 1e-12)?;
        close(&format!("class {k} F"), c.f, wf, 1e-12)?;
    }

    let cfg = Config::default();
    let oracle = batch_annotate(index, &cfg, 4).map_err(e)?.records;
    let relabeled: Vec<UtteranceAnnotation> = oracle
        .iter()
        .map(|u| {
            Ok(UtteranceAnnotation {
                words: u.words.iter().map(|w| w.relabel(&cfg.labeler.thresholds)).collect::<Result<_, _>>()?,
                ..u.clone()
            })
        })
        .collect::<prosody_core::Result<_>>()
        .map_err(e)?;
    let report = label_report(&oracle, &relabeled).map_err(e)?;
    ensure(
        report.prominence.accuracy == 1.0 && report.boundary.accuracy == 1.0,
        format!("self-relabel accuracy {} / {}", report.prominence.accuracy, report.boundary.accuracy),
    )?;
    Ok(format!(
        "hand example exact; self-relabel accuracy 1.0 over {} words",
        report.prominence.total
    ))
}

fn main() {
    let mut failed = 0;
    let mut record = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("FAIL {name}: {why}");
        }
    };

    record("fixture end-to-end labels", fixture_labels());
    record("dtw oracle equivalence", dtw_oracle());
    record("closed-form numerics", closed_form());
    record("cwt scale localization, zero, linearity", cwt_properties());
    match fixture_dir() {
        Ok((_dir, index)) => {
            record("determinism", determinism(&index));
            record("self-evaluation identity", self_evaluation(&index));
            record("label report", label_reports(&index));
        }
        Err(why) => {
            for name in ["determinism", "self-evaluation identity", "label report"] {
                record(name, Err(format!("fixture corpus: {why}")));
            }
        }
    }
    record("augmentation fidelity", augmentation());

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
