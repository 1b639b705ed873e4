"""Fetch the evaluation and training images from pinned PyPI source archives.

The standard test images (lena, boat, barbara, ...) and a disjoint set of
natural photographs for predictor training are pulled out of source
distributions that bundle them as sample data.  Everything is converted to
8-bit grayscale PGM.  Test images follow the usual protocol: center crop to a
square, resample to 512x512.  Training images keep their native geometry.

Usage:
    python scripts/build_corpora.py --test-dir tests/data/standard \
        --train-dir corpus/train --cache /tmp/msh-cache
"""

import argparse
import hashlib
import io
import os
import tarfile
import urllib.request

import numpy as np
from PIL import Image

PYPI = "https://pypi.org/"

ARCHIVES = {
    "skimage": ("packages/df/26/e87ebb6c083d8c647478ac2a0e2bef59f8543bd01e35888590a9457d0a5b/scikit-image-0.10.1.tar.gz",
                "83a1afcc16df75ff27237f84841a95c8f65c4e19ffd64849faa540aab48a5ab7"),
    "spams": ("packages/e4/26/7a47021754e8020ac82c1ba8d0b719198ec28cdc922152caea16b7512864/spams-2.6.5.4.tar.gz",
              "4c15b01268b15d20dca1e29b04d08268775ad7aae5883891454de110b571c9a7"),
    "sporco": ("packages/79/ad/65f4442d9da24e9dcfafedd6305ddf466b10de1c3e6bd5b77963c60cf302/sporco-0.2.2.post1.tar.gz",
               "75873d65ed522304d17095d1155a3344301a592ecb0279da72b8fcd27b184886"),
    "pywt": ("packages/5a/75/50581633d199812205ea8cdd0f6d52f12a624886b74bf1486335b67f01ff/pywavelets-1.9.0.tar.gz",
             "148d12203377772bea452a59211d98649c8ee4a05eff019a9021853a36babdc8"),
    "ptw": ("packages/3f/e3/1553046e97926b859edcab05d74b5b7543327c92b37c58919a3e49ff6151/pytorch_wavelets-1.3.0.tar.gz",
            "8b5c63f87c2bb36e6b342a7bb294926bda5cd974614fb4848deab6ec2792f56f"),
    "mahotas": ("packages/84/74/bd38163462eb346519f36dc205f0a52a01fb372c7bbcc87392c9b21cfe26/mahotas-1.4.9.tar.gz",
                "4c65f462a09fe19dea4ac7b630039478e9691126e430ace485e965635e535f71"),
    "opencv": ("packages/25/72/da7c69a3542071bf1e8f65336721b8b2659194425438d988f79bc14ed9cc/opencv-python-4.9.0.80.tar.gz",
               "1a9f0e6267de3a1a1db0c54213d022c7c8b5b9ca4b580e80bdc58516c922c9e1"),
    "sklearn": ("packages/88/00/835e3d280fdd7784e76bdef91dd9487582d7951a7254f59fc8004fc8b213/scikit-learn-1.3.2.tar.gz",
                "a2f54c76accc15a34bfb9066e6c7a56c1e7235dda5762b990792330b52ccfb05"),
}

# name -> (archive, member suffix)
TEST_IMAGES = {
    "lena": ("spams", "spams/data/lena.png"),
    "boat": ("spams", "spams/data/boat.png"),
    "barbara": ("sporco", "sporco/data/barbara.png"),
    "mandrill": ("ptw", "tests/mandrill.npz"),
    "aero": ("pywt", "pywt/data/aero.npz"),
    "ascent": ("pywt", "pywt/data/ascent.npz"),
    "camera": ("pywt", "pywt/data/camera.npz"),
    "kodim23": ("sporco", "sporco/data/kodim23.png"),
    "monarch": ("sporco", "sporco/data/monarch.png"),
    "sail": ("sporco", "sporco/data/sail.png"),
    "tulips": ("sporco", "sporco/data/tulips.png"),
    "fruits": ("opencv", "opencv/samples/data/fruits.jpg"),
}

# the RGB lena used by the color pipeline tests
COLOR_TEST = {"lena_rgb": ("skimage", "skimage/data/lena.png")}

_OCV = "opencv/samples/data/"
_OCD = "opencv/doc/"
TRAIN_IMAGES = {
    # opencv sample photographs
    "aero1": ("opencv", _OCV + "aero1.jpg"),
    "aero3": ("opencv", _OCV + "aero3.jpg"),
    "aloeL": ("opencv", _OCV + "aloeL.jpg"),
    "apple": ("opencv", _OCV + "apple.jpg"),
    "basketball1": ("opencv", _OCV + "basketball1.png"),
    "board": ("opencv", _OCV + "board.jpg"),
    "box_in_scene": ("opencv", _OCV + "box_in_scene.png"),
    "building": ("opencv", _OCV + "building.jpg"),
    "butterfly": ("opencv", _OCV + "butterfly.jpg"),
    "ela_original": ("opencv", _OCV + "ela_original.jpg"),
    "graf1": ("opencv", _OCV + "graf1.png"),
    "home": ("opencv", _OCV + "home.jpg"),
    "left": ("opencv", _OCV + "left.jpg"),
    "leuvenA": ("opencv", _OCV + "leuvenA.jpg"),
    "messi5": ("opencv", _OCV + "messi5.jpg"),
    "orange": ("opencv", _OCV + "orange.jpg"),
    "rubberwhale1": ("opencv", _OCV + "rubberwhale1.png"),
    "smarties": ("opencv", _OCV + "smarties.png"),
    "squirrel": ("opencv", _OCV + "squirrel_cls.jpg"),
    "starry_night": ("opencv", _OCV + "starry_night.jpg"),
    "stuff": ("opencv", _OCV + "stuff.jpg"),
    "pca_test1": ("opencv", _OCV + "pca_test1.jpg"),
    # opencv documentation photographs
    "bus": ("opencv", _OCD + "tutorials/dnn/dnn_pytorch_tf_detection/images/pexels_double_decker_bus.jpg"),
    "street1": ("opencv", _OCD + "tutorials/dnn/dnn_text_spotting/detect_test1.jpg"),
    "street2": ("opencv", _OCD + "tutorials/dnn/dnn_text_spotting/detect_test2.jpg"),
    "space_shuttle": ("opencv", _OCD + "tutorials/dnn/images/space_shuttle.jpg"),
    "hand": ("opencv", _OCD + "js_tutorials/js_assets/handSrc.jpg"),
    "astra": ("opencv", _OCD + "tutorials/app/images/astra_color.jpg"),
    "bg_frame": ("opencv", _OCD + "tutorials/others/images/Background_Subtraction_Tutorial_frame.jpg"),
    "budapest": ("opencv", _OCD + "tutorials/others/images/budapest.jpg"),
    "barcode_book": ("opencv", _OCD + "tutorials/others/images/barcode_book.jpg"),
    "fusion_mertens": ("opencv", _OCD + "py_tutorials/py_photo/py_hdr/images/fusion_mertens.jpg"),
    "motion_original": ("opencv", _OCD + "tutorials/imgproc/motion_deblur_filter/images/motion_original.jpg"),
    "pose": ("opencv", _OCD + "tutorials/features2d/homography/images/homography_pose.jpg"),
    "feature_building": ("opencv", _OCD + "py_tutorials/py_feature2d/py_features_meaning/images/feature_building.jpg"),
    "period_input": ("opencv", _OCD + "tutorials/imgproc/periodic_noise_removing_filter/images/period_input.jpg"),
    # scikit-image 0.10 sample data
    "brick": ("skimage", "skimage/data/brick.png"),
    "chelsea": ("skimage", "skimage/data/chelsea.png"),
    "coffee": ("skimage", "skimage/data/coffee.png"),
    "coins": ("skimage", "skimage/data/coins.png"),
    "grass": ("skimage", "skimage/data/grass.png"),
    "hubble": ("skimage", "skimage/data/hubble_deep_field.jpg"),
    "ihc": ("skimage", "skimage/data/ihc.png"),
    "moon": ("skimage", "skimage/data/moon.png"),
    "text": ("skimage", "skimage/data/text.png"),
    "page": ("skimage", "skimage/data/page.png"),
    "rough_wall": ("skimage", "skimage/data/rough-wall.png"),
    # mahotas demos
    "department_store": ("mahotas", "mahotas/demos/data/DepartmentStore.jpg"),
    "luispedro": ("mahotas", "mahotas/demos/data/luispedro.jpg"),
    "nuclear": ("mahotas", "mahotas/demos/data/nuclear.png"),
    # scikit-learn sample images
    "china": ("sklearn", "sklearn/datasets/images/china.jpg"),
    "flower": ("sklearn", "sklearn/datasets/images/flower.jpg"),
}


def fetch(key, cache):
    path, sha = ARCHIVES[key]
    local = os.path.join(cache, os.path.basename(path))
    if not os.path.exists(local):
        os.makedirs(cache, exist_ok=True)
        with urllib.request.urlopen(PYPI + path) as resp, open(local + ".part", "wb") as out:
            out.write(resp.read())
        os.replace(local + ".part", local)
    digest = hashlib.sha256(open(local, "rb").read()).hexdigest()
    if digest != sha:
        raise RuntimeError(f"checksum mismatch for {local}")
    return local


def extract(archive, suffix):
    with tarfile.open(archive) as tf:
        for member in tf.getmembers():
            if member.name.endswith("/" + suffix):
                return tf.extractfile(member).read()
    raise KeyError(f"{suffix} not in {archive}")


def to_gray(raw, suffix):
    if suffix.endswith(".npz"):
        data = np.load(io.BytesIO(raw))
        arr = data[data.files[0]]
        if arr.dtype != np.uint8:
            arr = np.rint(np.clip(arr * 255.0, 0, 255)).astype(np.uint8)
        return Image.fromarray(arr)
    return Image.open(io.BytesIO(raw)).convert("RGB").convert("L")


def square_512(im):
    w, h = im.size
    side = min(w, h)
    left, top = (w - side) // 2, (h - side) // 2
    im = im.crop((left, top, left + side, top + side))
    if side != 512:
        im = im.resize((512, 512), Image.LANCZOS)
    return im


def write_pgm(im, path):
    arr = np.asarray(im, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (arr.shape[1], arr.shape[0]))
        f.write(arr.tobytes())


def write_ppm(im, path):
    arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (arr.shape[1], arr.shape[0]))
        f.write(arr.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--test-dir")
    ap.add_argument("--train-dir")
    ap.add_argument("--cache", default=os.path.expanduser("~/.cache/microshift-corpora"))
    args = ap.parse_args()

    archives = {}

    def source(key, suffix):
        if key not in archives:
            archives[key] = fetch(key, args.cache)
        return extract(archives[key], suffix)

    if args.test_dir:
        os.makedirs(args.test_dir, exist_ok=True)
        for name, (key, suffix) in TEST_IMAGES.items():
            write_pgm(square_512(to_gray(source(key, suffix), suffix)), os.path.join(args.test_dir, name + ".pgm"))
            print("test", name)
        for name, (key, suffix) in COLOR_TEST.items():
            im = Image.open(io.BytesIO(source(key, suffix)))
            write_ppm(im, os.path.join(args.test_dir, name + ".ppm"))
            print("test", name)
    if args.train_dir:
        os.makedirs(args.train_dir, exist_ok=True)
        for name, (key, suffix) in TRAIN_IMAGES.items():
            write_pgm(to_gray(source(key, suffix), suffix), os.path.join(args.train_dir, name + ".pgm"))
            print("train", name)


if __name__ == "__main__":
    main()
