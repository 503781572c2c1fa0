//! Recursive-descent BVH parser with line/column error reporting.

use nalgebra::Vector3;
use std::sync::Arc;

use motion_core::{Joint, Skeleton};

use crate::error::BvhError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            Channel::Xrotation | Channel::Yrotation | Channel::Zrotation
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

/// Parsed BVH file: skeleton, per-joint channel order and the raw channel
/// matrix in file units (degrees for rotations).
#[derive(Debug, Clone)]
pub struct BvhDocument {
    pub skeleton: Arc<Skeleton>,
    pub channel_order: Vec<Vec<Channel>>,
    pub frames: Vec<f64>,
    pub n_frames: usize,
    pub n_channels: usize,
    pub frame_time: f64,
}

impl BvhDocument {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.frames[i * self.n_channels..(i + 1) * self.n_channels]
    }

    /// Structural oddities worth surfacing to users: position channels on
    /// non-root joints are parsed but ignored during conversion.
    pub fn warnings(&self) -> Vec<String> {
        let root = self.skeleton.root_index();
        self.channel_order
            .iter()
            .enumerate()
            .filter(|(j, chans)| *j != root && chans.iter().any(|c| !c.is_rotation()))
            .map(|(j, _)| {
                format!(
                    "joint {:?} declares position channels; they are ignored",
                    self.skeleton.joints()[j].name
                )
            })
            .collect()
    }

    /// Uniformly rescale lengths (offsets and position channels).
    pub fn scaled(&self, factor: f64) -> Result<Self, BvhError> {
        let joints = self
            .skeleton
            .joints()
            .iter()
            .map(|j| Joint::new(j.name.clone(), j.parent, j.offset * factor))
            .collect();
        let skeleton = Arc::new(Skeleton::with_extremities(
            joints,
            self.skeleton.hip_height() * factor,
            self.skeleton.extremities(),
        )?);
        let mut frames = self.frames.clone();
        let mut col = 0usize;
        let mut position_cols = Vec::new();
        for chans in &self.channel_order {
            for c in chans {
                if !c.is_rotation() {
                    position_cols.push(col);
                }
                col += 1;
            }
        }
        for f in 0..self.n_frames {
            for &c in &position_cols {
                frames[f * self.n_channels + c] *= factor;
            }
        }
        Ok(BvhDocument {
            skeleton,
            channel_order: self.channel_order.clone(),
            frames,
            n_frames: self.n_frames,
            n_channels: self.n_channels,
            frame_time: self.frame_time,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

struct Tokens<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let mut col = 0usize;
            for piece in line.split_whitespace() {
                let at = line[col..].find(piece).map(|p| col + p).unwrap_or(col);
                toks.push(Token {
                    text: piece,
                    line: ln + 1,
                    col: at + 1,
                });
                col = at + piece.len();
            }
        }
        Tokens { toks, pos: 0 }
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.toks.get(self.pos).copied();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn last_location(&self) -> (usize, usize) {
        self.toks
            .last()
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn expect(&mut self, what: &str) -> Result<Token<'a>, BvhError> {
        let (line, col) = self.last_location();
        self.next()
            .ok_or_else(|| BvhError::parse(line, col, format!("unexpected end of file, expected {what}")))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Token<'a>, BvhError> {
        let t = self.expect(kw)?;
        if t.text.eq_ignore_ascii_case(kw) {
            Ok(t)
        } else {
            Err(BvhError::parse(
                t.line,
                t.col,
                format!("expected {kw:?}, found {:?}", t.text),
            ))
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<(f64, Token<'a>), BvhError> {
        let t = self.expect(what)?;
        let v: f64 = t.text.parse().map_err(|_| {
            BvhError::parse(t.line, t.col, format!("expected {what}, found {:?}", t.text))
        })?;
        Ok((v, t))
    }
}

struct JointDraft {
    name: String,
    parent: Option<usize>,
    offset: Vector3<f64>,
    channels: Vec<Channel>,
}

/// Parse a BVH document from text.
pub fn parse_bvh(text: &str) -> Result<BvhDocument, BvhError> {
    let mut toks = Tokens::new(text);
    toks.expect_keyword("HIERARCHY")?;
    let root_tok = toks.expect("ROOT")?;
    if !root_tok.text.eq_ignore_ascii_case("ROOT") {
        return Err(BvhError::parse(
            root_tok.line,
            root_tok.col,
            format!("expected ROOT, found {:?}", root_tok.text),
        ));
    }
    let mut drafts: Vec<JointDraft> = Vec::new();
    parse_joint(&mut toks, None, &mut drafts)?;

    toks.expect_keyword("MOTION")?;
    let frames_kw = toks.expect("Frames:")?;
    if !frames_kw.text.eq_ignore_ascii_case("Frames:") {
        return Err(BvhError::parse(
            frames_kw.line,
            frames_kw.col,
            format!("expected 'Frames:', found {:?}", frames_kw.text),
        ));
    }
    let (n_frames_f, ft) = toks.expect_number("frame count")?;
    let n_frames = n_frames_f as usize;
    if n_frames_f < 0.0 || n_frames_f.fract() != 0.0 {
        return Err(BvhError::parse(ft.line, ft.col, "frame count must be a non-negative integer"));
    }
    // "Frame Time:" arrives as two tokens.
    let f1 = toks.expect_keyword("Frame")?;
    let f2 = toks.expect("Time:")?;
    if !f2.text.eq_ignore_ascii_case("Time:") {
        return Err(BvhError::parse(f1.line, f2.col, "expected 'Frame Time:'"));
    }
    let (frame_time, tt) = toks.expect_number("frame time")?;
    if !(frame_time > 0.0) {
        return Err(BvhError::parse(tt.line, tt.col, "frame time must be positive"));
    }

    let n_channels: usize = drafts.iter().map(|d| d.channels.len()).sum();
    let mut frames = Vec::with_capacity(n_frames * n_channels);
    for _ in 0..n_frames * n_channels {
        let (v, _) = toks.expect_number("channel value")?;
        frames.push(v);
    }
    if let Some(t) = toks.peek() {
        return Err(BvhError::parse(
            t.line,
            t.col,
            format!("trailing content after motion data: {:?}", t.text),
        ));
    }

    let channel_order: Vec<Vec<Channel>> = drafts.iter().map(|d| d.channels.clone()).collect();
    let hip_height = estimate_hip_height(&drafts, &channel_order, &frames, n_frames, n_channels);
    let joints: Vec<Joint> = drafts
        .into_iter()
        .map(|d| Joint::new(d.name, d.parent, d.offset))
        .collect();
    let skeleton = Arc::new(Skeleton::new(joints, hip_height)?);
    Ok(BvhDocument {
        skeleton,
        channel_order,
        frames,
        n_frames,
        n_channels,
        frame_time,
    })
}

fn parse_joint(
    toks: &mut Tokens,
    parent: Option<usize>,
    drafts: &mut Vec<JointDraft>,
) -> Result<usize, BvhError> {
    let name_tok = toks.expect("joint name")?;
    let name = name_tok.text.to_string();
    expect_symbol(toks, "{")?;
    toks.expect_keyword("OFFSET")?;
    let (ox, _) = toks.expect_number("offset x")?;
    let (oy, _) = toks.expect_number("offset y")?;
    let (oz, _) = toks.expect_number("offset z")?;
    toks.expect_keyword("CHANNELS")?;
    let (count_f, ct) = toks.expect_number("channel count")?;
    let count = count_f as usize;
    if count_f.fract() != 0.0 || count > 6 {
        return Err(BvhError::parse(ct.line, ct.col, "invalid channel count"));
    }
    let mut channels = Vec::with_capacity(count);
    for _ in 0..count {
        let t = toks.expect("channel name")?;
        let ch = match t.text {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            other => {
                return Err(BvhError::UnsupportedChannel {
                    line: t.line,
                    name: other.to_string(),
                })
            }
        };
        channels.push(ch);
    }
    let index = drafts.len();
    drafts.push(JointDraft {
        name,
        parent,
        offset: Vector3::new(ox, oy, oz),
        channels,
    });

    loop {
        let t = toks.expect("JOINT, End Site or '}'")?;
        if t.text == "}" {
            break;
        } else if t.text.eq_ignore_ascii_case("JOINT") {
            parse_joint(toks, Some(index), drafts)?;
        } else if t.text.eq_ignore_ascii_case("End") {
            let site = toks.expect("Site")?;
            if !site.text.eq_ignore_ascii_case("Site") {
                return Err(BvhError::parse(site.line, site.col, "expected 'End Site'"));
            }
            expect_symbol(toks, "{")?;
            toks.expect_keyword("OFFSET")?;
            toks.expect_number("offset x")?;
            toks.expect_number("offset y")?;
            toks.expect_number("offset z")?;
            expect_symbol(toks, "}")?;
        } else {
            return Err(BvhError::parse(
                t.line,
                t.col,
                format!("expected JOINT, End Site or '}}', found {:?}", t.text),
            ));
        }
    }
    Ok(index)
}

fn expect_symbol(toks: &mut Tokens, sym: &str) -> Result<(), BvhError> {
    let t = toks.expect(sym)?;
    if t.text == sym {
        Ok(())
    } else {
        Err(BvhError::parse(
            t.line,
            t.col,
            format!("expected {sym:?}, found {:?}", t.text),
        ))
    }
}

/// Hip height in file units: mean root Y-position channel when present and
/// positive, otherwise the root offset height, otherwise 1.
fn estimate_hip_height(
    drafts: &[JointDraft],
    channel_order: &[Vec<Channel>],
    frames: &[f64],
    n_frames: usize,
    n_channels: usize,
) -> f64 {
    let root = drafts.iter().position(|d| d.parent.is_none()).unwrap_or(0);
    let mut col = 0usize;
    for (j, chans) in channel_order.iter().enumerate() {
        for c in chans {
            if j == root && *c == Channel::Yposition && n_frames > 0 {
                let mean = (0..n_frames)
                    .map(|f| frames[f * n_channels + col])
                    .sum::<f64>()
                    / n_frames as f64
                    + drafts[root].offset.y;
                if mean > 0.0 {
                    return mean;
                }
            }
            col += 1;
        }
    }
    if drafts[root].offset.y > 0.0 {
        drafts[root].offset.y
    } else {
        1.0
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = "\
HIERARCHY
ROOT Root
{
  OFFSET 0.0 1.0 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation
  End Site
  {
    OFFSET 0.0 -1.0 0.0
  }
}
MOTION
Frames: 2
Frame Time: 0.033333
0.0 1.0 0.0 0.0 0.0 0.0
0.1 1.0 0.0 0.0 0.0 0.0
";

    #[test]
    fn parses_minimal_fixture() {
        let doc = parse_bvh(MINIMAL).unwrap();
        assert_eq!(doc.skeleton.joint_count(), 1);
        assert_eq!(doc.n_frames, 2);
        assert_eq!(doc.n_channels, 6);
        assert!((doc.frame_time - 0.033333).abs() < 1e-9);
        assert_eq!(doc.frame(1)[0], 0.1);
    }

    #[test]
    fn truncated_motion_reports_line() {
        let truncated = MINIMAL.rsplit_once('\n').unwrap().0; // drop trailing newline
        let truncated = &truncated[..truncated.len() - 12]; // cut into last frame
        match parse_bvh(truncated) {
            Err(BvhError::Parse { line, .. }) => assert!(line >= 13, "line {line}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_channel_is_rejected() {
        let bad = MINIMAL.replace("Xrotation", "Wrotation");
        assert!(matches!(
            parse_bvh(&bad),
            Err(BvhError::UnsupportedChannel { .. })
        ));
    }

    #[test]
    fn scaled_rescales_offsets_and_positions() {
        let doc = parse_bvh(MINIMAL).unwrap().scaled(0.01).unwrap();
        assert!((doc.skeleton.joints()[0].offset.y - 0.01).abs() < 1e-12);
        assert!((doc.frame(1)[0] - 0.001).abs() < 1e-12);
        assert!((doc.frame(0)[3]).abs() < 1e-12); // rotations untouched
    }
}
