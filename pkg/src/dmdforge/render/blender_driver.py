"""Blender-side driver: build and render one scene directive.

Run by ``BlenderBackend`` as
``blender -b --factory-startup -P blender_driver.py -- scene.json OUT_DIR BASE_DIR``.
Only Blender's bundled Python can import this module (it needs ``bpy``).
Writes ``rgb.png``, ``depth.png`` (16-bit, normalized to the depth bounds)
and any requested optional passes to ``OUT_DIR``.
"""
import json
import math
import os
import sys

import bpy
from mathutils import Matrix, Vector


def _import_mesh(path):
    ext = os.path.splitext(path)[1].lower()
    before = set(bpy.data.objects)
    if ext == ".obj":
        if hasattr(bpy.ops.wm, "obj_import"):
            bpy.ops.wm.obj_import(filepath=path)
        else:
            bpy.ops.import_scene.obj(filepath=path)
    elif ext == ".stl":
        if hasattr(bpy.ops.wm, "stl_import"):
            bpy.ops.wm.stl_import(filepath=path)
        else:
            bpy.ops.import_mesh.stl(filepath=path)
    elif ext == ".ply":
        if hasattr(bpy.ops.wm, "ply_import"):
            bpy.ops.wm.ply_import(filepath=path)
        else:
            bpy.ops.import_mesh.ply(filepath=path)
    elif ext in (".glb", ".gltf"):
        bpy.ops.import_scene.gltf(filepath=path)
    elif ext == ".fbx":
        bpy.ops.import_scene.fbx(filepath=path)
    elif ext == ".blend":
        with bpy.data.libraries.load(path) as (src, dst):
            dst.objects = list(src.objects)
        for obj in dst.objects:
            if obj is not None:
                bpy.context.scene.collection.objects.link(obj)
    else:
        raise RuntimeError("unsupported mesh format: " + ext)
    meshes = [o for o in bpy.data.objects if o not in before and o.type == "MESH"]
    if not meshes:
        raise RuntimeError("no mesh objects imported from " + path)
    if len(meshes) > 1:
        bpy.ops.object.select_all(action="DESELECT")
        for o in meshes:
            o.select_set(True)
        bpy.context.view_layer.objects.active = meshes[0]
        bpy.ops.object.join()
    return meshes[0]


def _principled(name, rgb):
    mat = bpy.data.materials.new(name)
    mat.use_nodes = True
    bsdf = mat.node_tree.nodes.get("Principled BSDF")
    bsdf.inputs["Base Color"].default_value = (rgb[0], rgb[1], rgb[2], 1.0)
    return mat, bsdf


def _display_material(texture_path):
    mat, bsdf = _principled("display", (1.0, 1.0, 1.0))
    nodes, links = mat.node_tree.nodes, mat.node_tree.links
    tex = nodes.new("ShaderNodeTexImage")
    tex.image = bpy.data.images.load(texture_path)
    tex.interpolation = "Closest"
    links.new(tex.outputs["Color"], bsdf.inputs["Base Color"])
    return mat


def _apply_display(obj, face_index, uv_corners, texture_path, body_rgb):
    mesh = obj.data
    if face_index >= len(mesh.polygons):
        raise RuntimeError("face index %d out of range (%d faces)" % (face_index, len(mesh.polygons)))
    body, _ = _principled("body", body_rgb)
    mesh.materials.clear()
    mesh.materials.append(body)
    mesh.materials.append(_display_material(texture_path))
    for poly in mesh.polygons:
        poly.material_index = 0
    face = mesh.polygons[face_index]
    face.material_index = 1
    uv_layer = mesh.uv_layers.active or mesh.uv_layers.new(name="UVMap")
    for k, loop_index in enumerate(face.loop_indices):
        uv_layer.data[loop_index].uv = uv_corners[k % 4]


def _rotate_about(obj, axis, degrees, pivot):
    obj.rotation_euler = (0.0, 0.0, 0.0)
    bpy.context.view_layer.update()
    rot = Matrix.Rotation(math.radians(degrees), 4, axis.upper())
    pv = Matrix.Translation(Vector(pivot))
    obj.matrix_world = pv @ rot @ pv.inverted() @ obj.matrix_world


def _camera(scene, cam):
    data = bpy.data.cameras.new("camera")
    data.lens = cam["focal_length"]
    data.sensor_fit = "HORIZONTAL"
    data.sensor_width = cam["sensor_width"]
    obj = bpy.data.objects.new("camera", data)
    scene.collection.objects.link(obj)
    obj.location = Vector(cam["position"])
    obj.rotation_mode = "QUATERNION"
    obj.rotation_quaternion = Vector(cam["look_dir"]).to_track_quat("-Z", "Y")
    scene.camera = obj
    return obj


def _light(scene, light):
    data = bpy.data.lights.new("key", type="POINT")
    data.energy = light["energy"]
    data.color = light["color"]
    data.shadow_soft_size = light["radius"]
    data.use_nodes = True
    falloff = data.node_tree.nodes.new("ShaderNodeLightFalloff")
    falloff.inputs["Strength"].default_value = light["energy"]
    falloff.inputs["Smooth"].default_value = light["falloff"]
    emission = data.node_tree.nodes.get("Emission")
    if emission is not None:
        data.node_tree.links.new(falloff.outputs["Quadratic"], emission.inputs["Strength"])
    obj = bpy.data.objects.new("key", data)
    obj.location = Vector(light["position"])
    scene.collection.objects.link(obj)


def _compositor(scene, out_dir, near, far, passes):
    view_layer = scene.view_layers[0]
    view_layer.use_pass_z = True
    if "albedo" in passes:
        view_layer.use_pass_diffuse_color = True
    if "shading" in passes:
        view_layer.use_pass_diffuse_direct = True
    if "normal" in passes:
        view_layer.use_pass_normal = True
    scene.use_nodes = True
    tree = scene.node_tree
    tree.nodes.clear()
    rl = tree.nodes.new("CompositorNodeRLayers")
    comp = tree.nodes.new("CompositorNodeComposite")
    tree.links.new(rl.outputs["Image"], comp.inputs["Image"])

    remap = tree.nodes.new("CompositorNodeMapRange")
    remap.inputs["From Min"].default_value = near
    remap.inputs["From Max"].default_value = far
    remap.inputs["To Min"].default_value = 0.0
    remap.inputs["To Max"].default_value = 1.0
    remap.use_clamp = True
    tree.links.new(rl.outputs["Depth"], remap.inputs["Value"])

    out = tree.nodes.new("CompositorNodeOutputFile")
    out.base_path = out_dir
    out.format.file_format = "PNG"
    out.format.color_mode = "BW"
    out.format.color_depth = "16"
    out.file_slots[0].path = "depth"
    tree.links.new(remap.outputs["Value"], out.inputs[0])
    socket_names = {"albedo": "DiffCol", "shading": "DiffDir", "normal": "Normal"}
    for name in ("albedo", "shading", "normal"):
        if name in passes:
            out.file_slots.new(name)
            tree.links.new(rl.outputs[socket_names[name]], out.inputs[name])


def main():
    argv = sys.argv[sys.argv.index("--") + 1:]
    directive_path, out_dir, base_dir = argv[:3]
    with open(directive_path, encoding="utf-8") as fh:
        d = json.load(fh)

    bpy.ops.wm.read_factory_settings(use_empty=True)
    scene = bpy.context.scene
    scene.render.engine = "CYCLES"
    scene.cycles.samples = 64
    w, h = d["resolution"]
    scene.render.resolution_x, scene.render.resolution_y = w, h
    scene.render.resolution_percentage = 100
    scene.render.image_settings.file_format = "PNG"
    scene.render.image_settings.color_mode = "RGB"
    scene.frame_current = 1

    world = bpy.data.worlds.new("world")
    world.use_nodes = True
    scene.world = world

    dev = d["device"]
    obj = _import_mesh(os.path.join(base_dir, dev["mesh"]))
    texture = os.path.join(base_dir, d["display"]["texture"])
    _apply_display(obj, dev["face_index"], d["display"]["uv_corners"], texture, d["body_color"])
    rot = d["object_rotation"]
    _rotate_about(obj, rot["axis"], rot["degrees"], rot["pivot"])

    cam = _camera(scene, d["camera"])
    cam.data.clip_end = max(d["depth_bounds"][1] * 2.0, 100.0)
    _light(scene, d["light"])
    near, far = d["depth_bounds"]
    _compositor(scene, out_dir, near, far, d["passes"])

    scene.render.filepath = os.path.join(out_dir, "rgb.png")
    bpy.ops.render.render(write_still=True)

    # file-output nodes append the frame number
    for name in ("depth", "albedo", "shading", "normal"):
        numbered = os.path.join(out_dir, "%s%04d.png" % (name, scene.frame_current))
        if os.path.exists(numbered):
            os.replace(numbered, os.path.join(out_dir, name + ".png"))


if __name__ == "__main__":
    main()
