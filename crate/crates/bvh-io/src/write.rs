//! BVH text output. The writer emits the canonical channel layout
//! (root: 3 positions + ZYX rotations, joints: ZYX rotations) regardless of
//! how the source document was ordered.

use crate::parse::BvhDocument;

pub fn write_bvh(doc: &BvhDocument) -> String {
    let skeleton = &doc.skeleton;
    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    write_joint(doc, skeleton.root_index(), 0, true, &mut out);
    out.push_str("MOTION\n");
    out.push_str(&format!("Frames: {}\n", doc.n_frames));
    out.push_str(&format!("Frame Time: {:.8}\n", doc.frame_time));
    for f in 0..doc.n_frames {
        let row = doc.frame(f);
        let line: Vec<String> = row.iter().map(|v| format!("{v:.8}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(doc: &BvhDocument, joint: usize, depth: usize, is_root: bool, out: &mut String) {
    let skeleton = &doc.skeleton;
    let pad = "  ".repeat(depth);
    let j = &skeleton.joints()[joint];
    out.push_str(&format!(
        "{pad}{} {}\n{pad}{{\n",
        if is_root { "ROOT" } else { "JOINT" },
        j.name
    ));
    let inner = "  ".repeat(depth + 1);
    out.push_str(&format!(
        "{inner}OFFSET {:.8} {:.8} {:.8}\n",
        j.offset.x, j.offset.y, j.offset.z
    ));
    let chans = &doc.channel_order[joint];
    let names: Vec<&str> = chans.iter().map(|c| c.name()).collect();
    out.push_str(&format!(
        "{inner}CHANNELS {} {}\n",
        chans.len(),
        names.join(" ")
    ));
    let children = skeleton.children(joint);
    if children.is_empty() {
        out.push_str(&format!(
            "{inner}End Site\n{inner}{{\n{inner}  OFFSET 0.00000000 0.00000000 0.00000000\n{inner}}}\n"
        ));
    } else {
        for c in children {
            write_joint(doc, c, depth + 1, false, out);
        }
    }
    out.push_str(&format!("{pad}}}\n"));
}

#[cfg(test)]
mod tests {
    use crate::parse::parse_bvh;

    #[test]
    fn writer_output_reparses_identically() {
        let doc = parse_bvh(crate::parse::tests::MINIMAL).unwrap();
        let text = crate::write::write_bvh(&doc);
        let doc2 = parse_bvh(&text).unwrap();
        assert_eq!(doc.n_frames, doc2.n_frames);
        assert_eq!(doc.n_channels, doc2.n_channels);
        assert_eq!(doc.channel_order, doc2.channel_order);
        for (a, b) in doc.frames.iter().zip(&doc2.frames) {
            assert!((a - b).abs() < 1e-7);
        }
        assert_eq!(
            doc.skeleton.joints().len(),
            doc2.skeleton.joints().len()
        );
    }
}
